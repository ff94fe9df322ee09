#include "yamabe/report.hpp"

#include <cstdio>

namespace yamabe {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    default:
      return "indeterminate";
  }
}

std::string VerificationReport::inputs_digest() const {
  const std::string s = inputs.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::ordered_json VerificationReport::to_json() const {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["anchor"] = anchor;
  j["inputs"] = inputs;
  j["inputs_digest"] = inputs_digest();
  j["computed"] = computed;
  j["reference"] = reference;
  j["provenance"] = provenance;
  j["tolerance"] = tolerance;
  j["norm"] = norm;
  j["verdict"] = to_string(verdict);
  j["expected_fail"] = expected_fail;
  j["notes"] = notes;
  return j;
}

}  // namespace yamabe
