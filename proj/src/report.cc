#include "coupon/report.h"

#include <cmath>
#include <cstdio>

namespace coupon {

std::string instance_digest(const Instance& inst) {
  const std::string text = instance_to_json(inst).dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

nlohmann::ordered_json allocation_to_json(const Allocation& s) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const UserCouponPair& p : s.pairs()) out.push_back({p.user + 1, p.coupon + 1});
  return out;
}

nlohmann::ordered_json matrix_to_json(const Matrix& values) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (int r = 0; r < values.rows(); ++r) {
    const auto row = values.row(r);
    out.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

void SampleStats::add(double x) {
  ++count;
  const double delta = x - running_mean_;
  running_mean_ += delta / static_cast<double>(count);
  m2_ += delta * (x - running_mean_);
}

void SampleStats::finish() {
  mean = running_mean_;
  if (count > 1) {
    stddev = std::sqrt(std::max(0.0, m2_ / (static_cast<double>(count) - 1.0)));
    std_error = stddev / std::sqrt(static_cast<double>(count));
  }
}

}  // namespace coupon
