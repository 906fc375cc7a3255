#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "seq2seq/matrix.hpp"

namespace seq2seq {

enum class NormalizerKind { Hardmax, Softmax, Average };

// One attention head of the dot-product attention with a query bias:
// head(X) = W_O (W_V X) N[(W_K X)^T (W_Q X - b_Q 1_n^T)].
template <typename T>
struct AttentionHead {
  Matrix<T> w_o;          // d x m
  Matrix<T> w_v, w_k, w_q;  // m x d
  std::vector<T> b_q;     // length m

  std::size_t head_size() const { return w_v.rows(); }
  std::size_t embed_dim() const { return w_v.cols(); }
};

template <typename T>
struct AttnSublayer {
  std::vector<AttentionHead<T>> heads;
  NormalizerKind normalizer = NormalizerKind::Hardmax;
  double lambda = 1.0;  // softmax temperature, used only for Softmax
};

// Piecewise-linear activation with at most three pieces on
// (-inf, c1), [c1, c2), [c2, inf); at least one piece must be constant.
// With c1 == c2 the middle piece is unused.
template <typename T>
struct PiecewiseLinear3 {
  struct Piece {
    T slope{0}, intercept{0};
  };
  T c1{0}, c2{0};
  Piece lo, mid, hi;

  T operator()(const T& t) const {
    const Piece& p = t < c1 ? lo : (t < c2 ? mid : hi);
    return p.slope * t + p.intercept;
  }

  bool has_constant_piece() const {
    bool mid_used = c1 < c2;
    return lo.slope == T(0) || hi.slope == T(0) || (mid_used && mid.slope == T(0));
  }
};

struct ReluActivation {};

template <typename T>
using FFActivation = std::variant<ReluActivation, PiecewiseLinear3<T>>;

template <typename T>
struct FFSublayer {
  Matrix<T> w1;        // r x d
  std::vector<T> b1;   // r
  Matrix<T> w2;        // d x r
  std::vector<T> b2;   // d
  FFActivation<T> activation = ReluActivation{};

  std::size_t hidden_size() const { return w1.rows(); }
};

// BProj(X) = X + W_O X W_P. W_P is n x n, tying the layer to one sequence
// length.
template <typename T>
struct BProjSublayer {
  Matrix<T> w_o;  // d x d
  Matrix<T> w_p;  // n x n
};

// SepConv(X) = X + W_O (X * W_C), convolving row i of X with row i of the
// filter bank. Zero padding, output aligned: (x * w)_j = sum_t w_t x_{j-t}.
template <typename T>
struct SepConvSublayer {
  Matrix<T> w_o;  // d x d
  Matrix<T> w_c;  // d x k
};

template <typename T>
using Sublayer = std::variant<AttnSublayer<T>, FFSublayer<T>, BProjSublayer<T>, SepConvSublayer<T>>;

template <typename T>
struct Network {
  std::vector<Sublayer<T>> sublayers;
  std::optional<Matrix<T>> positional_encoding;  // d x n, added once before sublayer 1
};

namespace detail {
template <typename T>
void check_seq_input(const Matrix<T>& x) {
  if (x.rows() < 1 || x.cols() < 2) throw ShapeError("sequence input must be d >= 1, n >= 2");
}
}  // namespace detail

template <typename T>
Matrix<T> attn_forward(const Matrix<T>& x, const AttnSublayer<T>& layer) {
  detail::check_seq_input(x);
  if (layer.heads.empty()) throw ShapeError("attention sublayer needs at least one head");
  const std::size_t n = x.cols();
  Matrix<T> out = x;
  for (const auto& head : layer.heads) {
    if (head.embed_dim() != x.rows()) throw ShapeError("attention head dimension mismatch");
    Matrix<T> scores;
    if (layer.normalizer != NormalizerKind::Average) {
      Matrix<T> keys = head.w_k * x;    // m x n
      Matrix<T> queries = head.w_q * x;  // m x n
      for (std::size_t i = 0; i < queries.rows(); ++i)
        for (std::size_t j = 0; j < n; ++j) queries(i, j) -= head.b_q[i];
      scores = keys.transpose() * queries;  // n x n
    }
    Matrix<T> weights;
    switch (layer.normalizer) {
      case NormalizerKind::Hardmax:
        weights = hardmax_columns(scores);
        break;
      case NormalizerKind::Softmax:
        weights = softmax_columns(scores, layer.lambda);
        break;
      case NormalizerKind::Average:
        weights = Matrix<T>(n, n, T(1) / T(static_cast<int>(n)));
        break;
    }
    out = out + head.w_o * (head.w_v * x) * weights;
  }
  return out;
}

template <typename T>
Matrix<T> ff_forward(const Matrix<T>& x, const FFSublayer<T>& layer) {
  detail::check_seq_input(x);
  if (layer.w1.cols() != x.rows()) throw ShapeError("feed-forward dimension mismatch");
  Matrix<T> h = layer.w1 * x;
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = 0; j < h.cols(); ++j) {
      T t = h(i, j) + layer.b1[i];
      if (std::holds_alternative<ReluActivation>(layer.activation)) {
        h(i, j) = t > T(0) ? t : T(0);
      } else {
        h(i, j) = std::get<PiecewiseLinear3<T>>(layer.activation)(t);
      }
    }
  Matrix<T> out = x + layer.w2 * h;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += layer.b2[i];
  return out;
}

template <typename T>
Matrix<T> bproj_forward(const Matrix<T>& x, const BProjSublayer<T>& layer) {
  detail::check_seq_input(x);
  if (layer.w_p.rows() != x.cols() || layer.w_p.cols() != x.cols())
    throw ShapeError("bproj: W_P must be n x n for this sequence length");
  return x + layer.w_o * x * layer.w_p;
}

template <typename T>
Matrix<T> sepconv_forward(const Matrix<T>& x, const SepConvSublayer<T>& layer) {
  detail::check_seq_input(x);
  const std::size_t d = x.rows(), n = x.cols(), k = layer.w_c.cols();
  if (layer.w_c.rows() != d) throw ShapeError("sepconv: filter bank rows must equal d");
  if (k < 1 || k > n) throw ShapeError("sepconv: filter length must satisfy 1 <= k <= n");
  Matrix<T> conv(d, n);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < k && t <= j; ++t)
        conv(i, j) += layer.w_c(i, t) * x(i, j - t);
  return x + layer.w_o * conv;
}

template <typename T>
Matrix<T> sublayer_forward(const Matrix<T>& x, const Sublayer<T>& layer) {
  return std::visit([&](const auto& l) { return forward_one(x, l); }, layer);
}

template <typename T>
Matrix<T> forward_one(const Matrix<T>& x, const AttnSublayer<T>& l) { return attn_forward(x, l); }
template <typename T>
Matrix<T> forward_one(const Matrix<T>& x, const FFSublayer<T>& l) { return ff_forward(x, l); }
template <typename T>
Matrix<T> forward_one(const Matrix<T>& x, const BProjSublayer<T>& l) { return bproj_forward(x, l); }
template <typename T>
Matrix<T> forward_one(const Matrix<T>& x, const SepConvSublayer<T>& l) { return sepconv_forward(x, l); }

template <typename T>
Matrix<T> network_forward(const Matrix<T>& x, const Network<T>& net) {
  detail::check_seq_input(x);
  Matrix<T> z = net.positional_encoding ? x + *net.positional_encoding : x;
  for (const auto& layer : net.sublayers) z = sublayer_forward(z, layer);
  return z;
}

template <typename T, typename U>
Sublayer<U> sublayer_cast(const Sublayer<T>& s) {
  return std::visit(
      [](const auto& l) -> Sublayer<U> {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, AttnSublayer<T>>) {
          AttnSublayer<U> out;
          out.normalizer = l.normalizer;
          out.lambda = l.lambda;
          for (const auto& h : l.heads) {
            AttentionHead<U> hh{h.w_o.template cast<U>(), h.w_v.template cast<U>(),
                                h.w_k.template cast<U>(), h.w_q.template cast<U>(), {}};
            for (const auto& b : h.b_q) hh.b_q.push_back(ScalarTraits<U>::from_rational(Rational(b)));
            out.heads.push_back(std::move(hh));
          }
          return out;
        } else if constexpr (std::is_same_v<L, FFSublayer<T>>) {
          FFSublayer<U> out;
          out.w1 = l.w1.template cast<U>();
          out.w2 = l.w2.template cast<U>();
          for (const auto& b : l.b1) out.b1.push_back(ScalarTraits<U>::from_rational(Rational(b)));
          for (const auto& b : l.b2) out.b2.push_back(ScalarTraits<U>::from_rational(Rational(b)));
          if (std::holds_alternative<ReluActivation>(l.activation)) {
            out.activation = ReluActivation{};
          } else {
            const auto& p = std::get<PiecewiseLinear3<T>>(l.activation);
            PiecewiseLinear3<U> q;
            q.c1 = ScalarTraits<U>::from_rational(Rational(p.c1));
            q.c2 = ScalarTraits<U>::from_rational(Rational(p.c2));
            auto cv = [](const auto& piece) {
              return typename PiecewiseLinear3<U>::Piece{
                  ScalarTraits<U>::from_rational(Rational(piece.slope)),
                  ScalarTraits<U>::from_rational(Rational(piece.intercept))};
            };
            q.lo = cv(p.lo);
            q.mid = cv(p.mid);
            q.hi = cv(p.hi);
            out.activation = q;
          }
          return out;
        } else if constexpr (std::is_same_v<L, BProjSublayer<T>>) {
          return BProjSublayer<U>{l.w_o.template cast<U>(), l.w_p.template cast<U>()};
        } else {
          return SepConvSublayer<U>{l.w_o.template cast<U>(), l.w_c.template cast<U>()};
        }
      },
      s);
}

template <typename U, typename T>
Network<U> network_cast(const Network<T>& net) {
  Network<U> out;
  if (net.positional_encoding) out.positional_encoding = net.positional_encoding->template cast<U>();
  for (const auto& s : net.sublayers) out.sublayers.push_back(sublayer_cast<T, U>(s));
  return out;
}

}  // namespace seq2seq
