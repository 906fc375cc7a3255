#pragma once

#include "seq2seq/sublayers.hpp"

namespace seq2seq {

struct ConversionParams {
  double lambda = 1e4;        // softmax temperature
  Rational epsilon = Rational(1, 10000);  // ReLU transition-band width

  void validate() const {
    if (lambda <= 0) throw ConfigError("conversion: lambda must be > 0");
    if (epsilon <= 0) throw ConfigError("conversion: epsilon must be > 0");
  }
};

namespace detail {

// One ReLU term a * relu(sgn * t - shift).
template <typename T>
struct ReluTerm {
  T coeff;
  T sign;
  T shift;
};

// Terms realizing, around breakpoint c, the transition from piece p_l to
// piece p_r with a width-eps band (c - eps, c). Right-opening ReLUs: the
// terms vanish for t <= c - eps and sum to p_r - p_l for t >= c. Continuous
// breakpoints need one exact term.
template <typename T>
void breakpoint_terms_right(const typename PiecewiseLinear3<T>::Piece& p_l,
                            const typename PiecewiseLinear3<T>::Piece& p_r, const T& c,
                            const T& eps, std::vector<ReluTerm<T>>& out) {
  T jump = (p_r.slope * c + p_r.intercept) - (p_l.slope * c + p_l.intercept);
  T dslope = p_r.slope - p_l.slope;
  if (jump == T(0)) {
    if (dslope != T(0)) out.push_back({dslope, T(1), c});
    return;
  }
  T alpha = jump / eps;
  out.push_back({alpha, T(1), c - eps});
  out.push_back({dslope - alpha, T(1), c});
}

// Left-opening mirror: terms vanish for t >= c and sum to p_l - p_r for
// t <= c - eps.
template <typename T>
void breakpoint_terms_left(const typename PiecewiseLinear3<T>::Piece& p_l,
                           const typename PiecewiseLinear3<T>::Piece& p_r, const T& c,
                           const T& eps, std::vector<ReluTerm<T>>& out) {
  T jump = (p_r.slope * c + p_r.intercept) - (p_l.slope * c + p_l.intercept);
  T dslope = p_r.slope - p_l.slope;
  if (jump == T(0)) {
    if (dslope != T(0)) out.push_back({dslope, T(-1), -c});
    return;
  }
  T gamma = jump / eps;
  out.push_back({gamma, T(-1), -(c - eps)});
  out.push_back({dslope - gamma, T(-1), -c});
}

// phi as base constant plus at most four ReLU ramps: the constant piece
// anchors the representation and each breakpoint contributes <= 2 terms.
template <typename T>
std::pair<T, std::vector<ReluTerm<T>>> relu_terms_of_phi(const PiecewiseLinear3<T>& phi,
                                                         const T& eps) {
  if (!phi.has_constant_piece()) throw ConfigError("relu4: activation outside Phi");
  if (eps <= T(0)) throw ConfigError("relu4: epsilon must be > 0");
  bool mid_used = phi.c1 < phi.c2;
  if (mid_used && !(eps < (phi.c2 - phi.c1) / T(2)))
    throw ConfigError("relu4: epsilon must be below half the breakpoint gap");
  std::vector<ReluTerm<T>> terms;
  if (!mid_used) {
    // single breakpoint lo -> hi at c1
    if (phi.lo.slope == T(0)) {
      breakpoint_terms_right<T>(phi.lo, phi.hi, phi.c1, eps, terms);
      return {phi.lo.intercept, terms};
    }
    breakpoint_terms_left<T>(phi.lo, phi.hi, phi.c1, eps, terms);
    return {phi.hi.intercept, terms};
  }
  if (phi.lo.slope == T(0)) {
    breakpoint_terms_right<T>(phi.lo, phi.mid, phi.c1, eps, terms);
    breakpoint_terms_right<T>(phi.mid, phi.hi, phi.c2, eps, terms);
    return {phi.lo.intercept, terms};
  }
  if (phi.hi.slope == T(0)) {
    breakpoint_terms_left<T>(phi.lo, phi.mid, phi.c1, eps, terms);
    breakpoint_terms_left<T>(phi.mid, phi.hi, phi.c2, eps, terms);
    return {phi.hi.intercept, terms};
  }
  // middle piece is the constant one
  breakpoint_terms_left<T>(phi.lo, phi.mid, phi.c1, eps, terms);
  breakpoint_terms_right<T>(phi.mid, phi.hi, phi.c2, eps, terms);
  return {phi.mid.intercept, terms};
}

}  // namespace detail

// Scalar evaluation of the four-ReLU approximation; equals phi everywhere
// outside the bands (c1 - eps, c1) and (c2 - eps, c2).
template <typename T>
T relu4_eval(const PiecewiseLinear3<T>& phi, const T& eps, const T& t) {
  auto [base, terms] = detail::relu_terms_of_phi(phi, eps);
  T acc = base;
  for (const auto& term : terms) {
    T z = term.sign * t - term.shift;
    if (z > T(0)) acc += term.coeff * z;
  }
  return acc;
}

// Expands a rank-1 feed-forward sublayer with a Phi activation into an
// equivalent-off-bands ReLU sublayer with hidden size exactly 4.
template <typename T>
FFSublayer<T> relu4_of_phi(const FFSublayer<T>& layer, const T& eps) {
  if (std::holds_alternative<ReluActivation>(layer.activation))
    throw ConfigError("relu4: sublayer already uses ReLU");
  if (layer.hidden_size() != 1)
    throw ConfigError("relu4: expected a rank-1 constructed sublayer");
  const auto& phi = std::get<PiecewiseLinear3<T>>(layer.activation);
  auto [base, terms] = detail::relu_terms_of_phi(phi, eps);
  if (terms.size() > 4) throw ConfigError("relu4: activation needs more than four ReLUs");

  const std::size_t d = layer.w1.cols();
  FFSublayer<T> out;
  out.activation = ReluActivation{};
  out.w1 = Matrix<T>::zero(4, d);
  out.b1 = std::vector<T>(4, T(0));
  out.w2 = Matrix<T>::zero(d, 4);
  out.b2 = layer.b2;
  for (std::size_t r = 0; r < terms.size(); ++r) {
    // relu(sign * (w1 x + b1_orig) - shift)
    for (std::size_t j = 0; j < d; ++j) out.w1(r, j) = terms[r].sign * layer.w1(0, j);
    out.b1[r] = terms[r].sign * layer.b1[0] - terms[r].shift;
    for (std::size_t i = 0; i < d; ++i) out.w2(i, r) = layer.w2(i, 0) * terms[r].coeff;
  }
  // phi == base + ramps, so the base constant folds into the output bias
  for (std::size_t i = 0; i < d; ++i) out.b2[i] += layer.w2(i, 0) * base;
  return out;
}

// Hardmax -> Softmax(lambda) with identical weights, Phi -> four ReLUs.
// Output stays in the exact scalar type; evaluate it after casting to double.
inline Network<Rational> anneal_network(const Network<Rational>& modified,
                                        const ConversionParams& params) {
  params.validate();
  Network<Rational> out;
  out.positional_encoding = modified.positional_encoding;
  for (const auto& s : modified.sublayers) {
    if (std::holds_alternative<AttnSublayer<Rational>>(s)) {
      AttnSublayer<Rational> a = std::get<AttnSublayer<Rational>>(s);
      if (a.normalizer != NormalizerKind::Hardmax)
        throw ConfigError("anneal: attention sublayer is not hardmax");
      a.normalizer = NormalizerKind::Softmax;
      a.lambda = params.lambda;
      out.sublayers.emplace_back(std::move(a));
    } else if (std::holds_alternative<FFSublayer<Rational>>(s)) {
      out.sublayers.emplace_back(
          relu4_of_phi(std::get<FFSublayer<Rational>>(s), params.epsilon));
    } else {
      throw ConfigError("anneal: network contains a non-constructed sublayer kind");
    }
  }
  return out;
}

}  // namespace seq2seq
