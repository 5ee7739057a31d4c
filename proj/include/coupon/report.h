#pragma once

#include <cstdint>
#include <string>

#include "coupon/instance.h"
#include "coupon/objective.h"
#include "json.hpp"

namespace coupon {

inline constexpr int kReportSchemaVersion = 1;

// FNV-1a 64 of the canonical JSON encoding, as 16 hex digits.
std::string instance_digest(const Instance& inst);

// [[user, coupon], ...] with 1-based indices.
nlohmann::ordered_json allocation_to_json(const Allocation& s);
nlohmann::ordered_json matrix_to_json(const Matrix& values);

// Mean, sample standard deviation and standard error of the mean.
struct SampleStats {
  double mean = 0.0;
  double stddev = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;

  void add(double x);
  void finish();

 private:
  double running_mean_ = 0.0;
  double m2_ = 0.0;  // Welford accumulator
};

}  // namespace coupon
