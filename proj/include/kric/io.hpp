#pragma once

// CSV export. Floats are written with 17 significant digits so that files
// from two runs can be compared textually.

#include <ostream>
#include <string>

#include "kric/field.hpp"
#include "kric/measure.hpp"
#include "kric/riccati.hpp"

namespace kric {

/// "%.17g".
std::string format_double(double x);

/// k, theta_k, w_k entries row-major.
void write_measure_csv(std::ostream& os, const MeasureAtoms& m);

/// t, theta_j, theta_k, gamma entries row-major; every stride-th slice plus
/// the first and the last.
void write_field_csv(std::ostream& os, const KernelField& f, std::size_t stride = 1);

/// t, k, theta_k, Theta entries row-major.
void write_feedback_csv(std::ostream& os, const FeedbackField& theta, const MeasureAtoms& m,
                        std::size_t stride = 1);

/// Writes text to a file, creating parent directories. Throws
/// std::runtime_error on I/O failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace kric
