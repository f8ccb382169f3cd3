#include "kric/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace kric {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_measure_csv(std::ostream& os, const MeasureAtoms& m) {
  os << "k,theta";
  for (Eigen::Index a = 0; a < m.d(); ++a) {
    for (Eigen::Index c = 0; c < m.d_prime(); ++c) os << ",w_" << a << "_" << c;
  }
  os << "\n";
  for (std::size_t k = 0; k < m.size(); ++k) {
    os << k << "," << format_double(m.node(k));
    for (Eigen::Index a = 0; a < m.d(); ++a) {
      for (Eigen::Index c = 0; c < m.d_prime(); ++c) os << "," << format_double(m.weight(k)(a, c));
    }
    os << "\n";
  }
}

namespace {

bool selected(std::size_t s, std::size_t steps, std::size_t stride) {
  return s == 0 || s == steps || (stride > 0 && s % stride == 0);
}

}  // namespace

void write_field_csv(std::ostream& os, const KernelField& f, std::size_t stride) {
  const MeasureAtoms& m = f.measure();
  const Eigen::Index d = f.d();
  os << "t,theta_j,theta_k";
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) os << ",gamma_" << a << "_" << b;
  }
  os << "\n";
  for (std::size_t s = 0; s <= f.steps(); ++s) {
    if (!selected(s, f.steps(), stride)) continue;
    const std::string t = format_double(f.grid().time(s));
    const KernelSlice& sl = f.slice(s);
    for (std::size_t j = 0; j < m.size(); ++j) {
      for (std::size_t k = 0; k < m.size(); ++k) {
        os << t << "," << format_double(m.node(j)) << "," << format_double(m.node(k));
        for (Eigen::Index a = 0; a < d; ++a) {
          for (Eigen::Index b = 0; b < d; ++b) os << "," << format_double(sl.at(j, k, a, b));
        }
        os << "\n";
      }
    }
  }
}

void write_feedback_csv(std::ostream& os, const FeedbackField& theta, const MeasureAtoms& m,
                        std::size_t stride) {
  os << "t,k,theta_k";
  const Eigen::Index rows = theta.values.empty() ? 0 : theta.values.front().rows();
  const Eigen::Index cols = theta.values.empty() ? 0 : theta.values.front().cols();
  for (Eigen::Index p = 0; p < rows; ++p) {
    for (Eigen::Index b = 0; b < cols; ++b) os << ",Theta_" << p << "_" << b;
  }
  os << "\n";
  const std::size_t steps = theta.values.empty() ? 0 : theta.values.size() - 1;
  for (std::size_t s = 0; s < theta.values.size(); ++s) {
    if (!selected(s, steps, stride)) continue;
    const std::string t = format_double(theta.grid.time(s));
    for (std::size_t k = 0; k < m.size(); ++k) {
      os << t << "," << k << "," << format_double(m.node(k));
      for (Eigen::Index p = 0; p < rows; ++p) {
        for (Eigen::Index b = 0; b < cols; ++b) os << "," << format_double(theta.values[s].at(k, p, b));
      }
      os << "\n";
    }
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace kric
