#include "qgraph/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qgraph/error.hpp"

namespace qgraph {

Potential Potential::constant(double value) {
  Potential p;
  p.kind_ = value == 0.0 ? Kind::Zero : Kind::Constant;
  p.constant_ = value;
  return p;
}

Potential Potential::piecewise(std::vector<PotentialPiece> pieces) {
  Potential p;
  p.kind_ = Kind::Piecewise;
  p.pieces_ = std::move(pieces);
  return p;
}

Potential Potential::sampled(std::vector<PotentialSample> samples) {
  Potential p;
  p.kind_ = Kind::Sampled;
  p.samples_ = std::move(samples);
  return p;
}

void Potential::validate(double length) const {
  const double slack = 1e-12 * std::max(1.0, length);
  switch (kind_) {
    case Kind::Zero:
      return;
    case Kind::Constant:
      if (!std::isfinite(constant_)) throw input_error("malformed potential: non-finite constant");
      return;
    case Kind::Piecewise: {
      double last = 0.0;
      for (const auto& piece : pieces_) {
        if (!std::isfinite(piece.value) || !std::isfinite(piece.from) || !std::isfinite(piece.to))
          throw input_error("malformed potential: non-finite piece");
        if (!(piece.from < piece.to)) throw input_error("malformed potential: empty or reversed piece");
        if (piece.from < last - slack)
          throw input_error("malformed potential: breakpoints must be strictly increasing");
        if (piece.from < -slack || piece.to > length + slack)
          throw input_error("malformed potential: piece outside [0, l]");
        last = piece.to;
      }
      return;
    }
    case Kind::Sampled: {
      if (samples_.size() < 2) throw input_error("malformed potential: need at least two samples");
      for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i].x) || !std::isfinite(samples_[i].value))
          throw input_error("malformed potential: non-finite sample");
        if (i > 0 && !(samples_[i].x > samples_[i - 1].x))
          throw input_error("malformed potential: sample grid must be strictly increasing");
      }
      if (samples_.front().x > slack || samples_.back().x < length - slack)
        throw input_error("malformed potential: sample grid must cover [0, l]");
      return;
    }
  }
}

double Potential::operator()(double x) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return constant_;
    case Kind::Piecewise:
      for (const auto& piece : pieces_)
        if (x >= piece.from && x < piece.to) return piece.value;
      if (!pieces_.empty() && x == pieces_.back().to) return pieces_.back().value;
      return 0.0;
    case Kind::Sampled: {
      if (x <= samples_.front().x) return samples_.front().value;
      if (x >= samples_.back().x) return samples_.back().value;
      auto it = std::upper_bound(samples_.begin(), samples_.end(), x,
                                 [](double v, const PotentialSample& s) { return v < s.x; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double w = (x - lo.x) / (hi.x - lo.x);
      return (1.0 - w) * lo.value + w * hi.value;
    }
  }
  return 0.0;
}

double Potential::min_value(double length) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return constant_;
    case Kind::Piecewise: {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& s : constant_segments(length)) m = std::min(m, s.value);
      return m;
    }
    case Kind::Sampled: {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& s : samples_) m = std::min(m, s.value);
      return m;
    }
  }
  return 0.0;
}

double Potential::max_value(double length) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return constant_;
    case Kind::Piecewise: {
      double m = -std::numeric_limits<double>::infinity();
      for (const auto& s : constant_segments(length)) m = std::max(m, s.value);
      return m;
    }
    case Kind::Sampled: {
      double m = -std::numeric_limits<double>::infinity();
      for (const auto& s : samples_) m = std::max(m, s.value);
      return m;
    }
  }
  return 0.0;
}

Potential Potential::restrict(double a, double b) const {
  switch (kind_) {
    case Kind::Zero:
    case Kind::Constant:
      return *this;
    case Kind::Piecewise: {
      std::vector<PotentialPiece> out;
      for (const auto& piece : pieces_) {
        const double from = std::max(piece.from, a);
        const double to = std::min(piece.to, b);
        if (to > from) out.push_back({from - a, to - a, piece.value});
      }
      if (out.empty()) return zero();
      return piecewise(std::move(out));
    }
    case Kind::Sampled: {
      std::vector<PotentialSample> out;
      out.push_back({0.0, (*this)(a)});
      for (const auto& s : samples_)
        if (s.x > a && s.x < b) out.push_back({s.x - a, s.value});
      out.push_back({b - a, (*this)(b)});
      return sampled(std::move(out));
    }
  }
  return *this;
}

std::vector<ConstantSegment> Potential::constant_segments(double length) const {
  switch (kind_) {
    case Kind::Zero:
      return {{length, 0.0}};
    case Kind::Constant:
      return {{length, constant_}};
    case Kind::Piecewise: {
      std::vector<ConstantSegment> out;
      double cursor = 0.0;
      for (const auto& piece : pieces_) {
        const double from = std::clamp(piece.from, 0.0, length);
        const double to = std::clamp(piece.to, 0.0, length);
        if (from > cursor) out.push_back({from - cursor, 0.0});
        if (to > from) out.push_back({to - from, piece.value});
        cursor = std::max(cursor, to);
      }
      if (cursor < length) out.push_back({length - cursor, 0.0});
      return out;
    }
    case Kind::Sampled:
      break;
  }
  throw precondition_error("sampled potentials have no exact constant decomposition");
}

}  // namespace qgraph
