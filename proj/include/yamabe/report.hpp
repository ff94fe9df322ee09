#pragma once

#include "json.hpp"

#include <string>
#include <vector>

namespace yamabe {

enum class Verdict { pass, fail, indeterminate };

std::string to_string(Verdict v);

// Structured record of one verification check. `computed` and `reference`
// are free-form JSON objects with stable key order (nlohmann::ordered_json).
struct VerificationReport {
  std::string id;
  std::string anchor;  // topic identifier, see docs/anchors.md
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  nlohmann::ordered_json computed = nlohmann::ordered_json::object();
  nlohmann::ordered_json reference = nlohmann::ordered_json::object();
  std::string provenance = "identity";  // closed_form | independent_oracle | identity | control
  double tolerance = 0.0;
  std::string norm = "max_abs";
  Verdict verdict = Verdict::indeterminate;
  bool expected_fail = false;
  std::vector<std::string> notes;

  bool passed() const { return verdict == Verdict::pass; }
  void set(bool ok) { verdict = ok ? Verdict::pass : Verdict::fail; }
  // Digest of `inputs` (FNV-1a over the serialized JSON).
  std::string inputs_digest() const;
  nlohmann::ordered_json to_json() const;
};

}  // namespace yamabe
