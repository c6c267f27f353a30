#pragma once

#include <vector>

namespace qgraph {

struct PotentialPiece {
  double from = 0.0;
  double to = 0.0;
  double value = 0.0;
  friend bool operator==(const PotentialPiece&, const PotentialPiece&) = default;
};

struct PotentialSample {
  double x = 0.0;
  double value = 0.0;
  friend bool operator==(const PotentialSample&, const PotentialSample&) = default;
};

// A constant-value stretch of an edge, used by transfer-matrix products.
struct ConstantSegment {
  double length = 0.0;
  double value = 0.0;
};

// Real, bounded edge potential V(x) on [0, l]. Piecewise-constant pieces
// need not cover the edge; uncovered stretches carry V = 0. Sampled
// potentials are interpolated linearly between grid points.
class Potential {
 public:
  enum class Kind { Zero, Constant, Piecewise, Sampled };

  Potential() = default;
  static Potential zero() { return {}; }
  static Potential constant(double value);
  static Potential piecewise(std::vector<PotentialPiece> pieces);
  static Potential sampled(std::vector<PotentialSample> samples);

  Kind kind() const noexcept { return kind_; }
  bool is_zero() const noexcept { return kind_ == Kind::Zero; }
  double constant_value() const noexcept { return constant_; }
  const std::vector<PotentialPiece>& pieces() const noexcept { return pieces_; }
  const std::vector<PotentialSample>& samples() const noexcept { return samples_; }

  // Throws an input error when the description is inconsistent with an
  // edge of the given length.
  void validate(double length) const;

  double operator()(double x) const;
  double min_value(double length) const;
  double max_value(double length) const;

  // Potential on [a, b], re-based to start at 0.
  Potential restrict(double a, double b) const;

  // Exact decomposition for zero/constant/piecewise potentials.
  std::vector<ConstantSegment> constant_segments(double length) const;

  friend bool operator==(const Potential&, const Potential&) = default;

 private:
  Kind kind_ = Kind::Zero;
  double constant_ = 0.0;
  std::vector<PotentialPiece> pieces_;
  std::vector<PotentialSample> samples_;
};

}  // namespace qgraph
