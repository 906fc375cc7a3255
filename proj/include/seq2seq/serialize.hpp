#pragma once

#include <fstream>

#include <json.hpp>

#include "seq2seq/convert.hpp"
#include "seq2seq/verify.hpp"

namespace seq2seq {

using Json = nlohmann::ordered_json;

// Exact scalars travel as fraction strings ("3/4", "-16"), never as floats.

inline Json matrix_to_json(const Matrix<Rational>& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(rational_to_string(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix<Rational> matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("matrix json: expected non-empty array");
  Matrix<Rational> m(j.size(), j[0].size());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (j[i].size() != m.cols()) throw ConfigError("matrix json: ragged rows");
    for (std::size_t c = 0; c < m.cols(); ++c)
      m(i, c) = parse_rational(j[i][c].get<std::string>());
  }
  return m;
}

inline Json vector_to_json(const std::vector<Rational>& v) {
  Json out = Json::array();
  for (const auto& x : v) out.push_back(rational_to_string(x));
  return out;
}

inline std::vector<Rational> vector_from_json(const Json& j) {
  std::vector<Rational> v;
  for (const auto& x : j) v.push_back(parse_rational(x.get<std::string>()));
  return v;
}

inline std::string normalizer_name(NormalizerKind k) {
  switch (k) {
    case NormalizerKind::Hardmax: return "hardmax";
    case NormalizerKind::Softmax: return "softmax";
    case NormalizerKind::Average: return "average";
  }
  throw ConfigError("unknown normalizer");
}

inline NormalizerKind normalizer_from_name(const std::string& s) {
  if (s == "hardmax") return NormalizerKind::Hardmax;
  if (s == "softmax") return NormalizerKind::Softmax;
  if (s == "average") return NormalizerKind::Average;
  throw ConfigError("unknown normalizer: " + s);
}

inline Json sublayer_to_json(const Sublayer<Rational>& s) {
  Json j;
  if (std::holds_alternative<AttnSublayer<Rational>>(s)) {
    const auto& a = std::get<AttnSublayer<Rational>>(s);
    j["kind"] = "attn";
    j["normalizer"] = normalizer_name(a.normalizer);
    if (a.normalizer == NormalizerKind::Softmax) j["lambda"] = a.lambda;
    Json heads = Json::array();
    for (const auto& h : a.heads) {
      Json hj;
      hj["w_o"] = matrix_to_json(h.w_o);
      hj["w_v"] = matrix_to_json(h.w_v);
      hj["w_k"] = matrix_to_json(h.w_k);
      hj["w_q"] = matrix_to_json(h.w_q);
      hj["b_q"] = vector_to_json(h.b_q);
      heads.push_back(std::move(hj));
    }
    j["heads"] = std::move(heads);
  } else if (std::holds_alternative<FFSublayer<Rational>>(s)) {
    const auto& f = std::get<FFSublayer<Rational>>(s);
    j["kind"] = "ff";
    j["w1"] = matrix_to_json(f.w1);
    j["b1"] = vector_to_json(f.b1);
    j["w2"] = matrix_to_json(f.w2);
    j["b2"] = vector_to_json(f.b2);
    if (std::holds_alternative<ReluActivation>(f.activation)) {
      j["activation"] = {{"kind", "relu"}};
    } else {
      const auto& p = std::get<PiecewiseLinear3<Rational>>(f.activation);
      j["activation"] = {
          {"kind", "pwl3"},
          {"c1", rational_to_string(p.c1)},
          {"c2", rational_to_string(p.c2)},
          {"lo", {rational_to_string(p.lo.slope), rational_to_string(p.lo.intercept)}},
          {"mid", {rational_to_string(p.mid.slope), rational_to_string(p.mid.intercept)}},
          {"hi", {rational_to_string(p.hi.slope), rational_to_string(p.hi.intercept)}}};
    }
  } else if (std::holds_alternative<BProjSublayer<Rational>>(s)) {
    const auto& b = std::get<BProjSublayer<Rational>>(s);
    j["kind"] = "bproj";
    j["w_o"] = matrix_to_json(b.w_o);
    j["w_p"] = matrix_to_json(b.w_p);
  } else {
    const auto& c = std::get<SepConvSublayer<Rational>>(s);
    j["kind"] = "sepconv";
    j["w_o"] = matrix_to_json(c.w_o);
    j["w_c"] = matrix_to_json(c.w_c);
  }
  return j;
}

inline Sublayer<Rational> sublayer_from_json(const Json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "attn") {
    AttnSublayer<Rational> a;
    a.normalizer = normalizer_from_name(j.at("normalizer").get<std::string>());
    if (j.contains("lambda")) a.lambda = j["lambda"].get<double>();
    for (const auto& hj : j.at("heads")) {
      AttentionHead<Rational> h;
      h.w_o = matrix_from_json(hj.at("w_o"));
      h.w_v = matrix_from_json(hj.at("w_v"));
      h.w_k = matrix_from_json(hj.at("w_k"));
      h.w_q = matrix_from_json(hj.at("w_q"));
      h.b_q = vector_from_json(hj.at("b_q"));
      a.heads.push_back(std::move(h));
    }
    return a;
  }
  if (kind == "ff") {
    FFSublayer<Rational> f;
    f.w1 = matrix_from_json(j.at("w1"));
    f.b1 = vector_from_json(j.at("b1"));
    f.w2 = matrix_from_json(j.at("w2"));
    f.b2 = vector_from_json(j.at("b2"));
    const Json& act = j.at("activation");
    if (act.at("kind") == "relu") {
      f.activation = ReluActivation{};
    } else {
      PiecewiseLinear3<Rational> p;
      p.c1 = parse_rational(act.at("c1").get<std::string>());
      p.c2 = parse_rational(act.at("c2").get<std::string>());
      auto piece = [](const Json& pj) {
        return PiecewiseLinear3<Rational>::Piece{parse_rational(pj[0].get<std::string>()),
                                                 parse_rational(pj[1].get<std::string>())};
      };
      p.lo = piece(act.at("lo"));
      p.mid = piece(act.at("mid"));
      p.hi = piece(act.at("hi"));
      f.activation = p;
    }
    return f;
  }
  if (kind == "bproj")
    return BProjSublayer<Rational>{matrix_from_json(j.at("w_o")), matrix_from_json(j.at("w_p"))};
  if (kind == "sepconv")
    return SepConvSublayer<Rational>{matrix_from_json(j.at("w_o")), matrix_from_json(j.at("w_c"))};
  throw ConfigError("unknown sublayer kind: " + kind);
}

inline Json network_to_json(const Network<Rational>& net) {
  Json j;
  if (net.positional_encoding) j["positional_encoding"] = matrix_to_json(*net.positional_encoding);
  Json layers = Json::array();
  for (const auto& s : net.sublayers) layers.push_back(sublayer_to_json(s));
  j["sublayers"] = std::move(layers);
  return j;
}

inline Network<Rational> network_from_json(const Json& j) {
  Network<Rational> net;
  if (j.contains("positional_encoding"))
    net.positional_encoding = matrix_from_json(j["positional_encoding"]);
  for (const auto& sj : j.at("sublayers")) net.sublayers.push_back(sublayer_from_json(sj));
  return net;
}

// Targets: {delta: "1/q", d, n, equivariant, entries: [{L, A}]}.

inline Json target_to_json(const PiecewiseConstantFn& fbar) {
  const GridParams& g = fbar.grid();
  Json j;
  j["delta"] = "1/" + std::to_string(g.q);
  j["d"] = g.d;
  j["n"] = g.n;
  j["equivariant"] = fbar.equivariant();
  Json entries = Json::array();
  fbar.for_each_entry([&](const Matrix<Rational>& l, const Matrix<Rational>& a) {
    entries.push_back({{"L", matrix_to_json(l)}, {"A", matrix_to_json(a)}});
  });
  j["entries"] = std::move(entries);
  return j;
}

inline GridParams grid_from_json(const Json& j) {
  std::string delta = j.at("delta").get<std::string>();
  Rational r = parse_rational(delta);
  if (numerator(r) != 1) throw ConfigError("grid: delta must be of the form 1/q");
  return GridParams(static_cast<long>(denominator(r)), j.at("d").get<std::size_t>(),
                    j.at("n").get<std::size_t>());
}

inline PiecewiseConstantFn target_from_json(const Json& j) {
  GridParams g = grid_from_json(j);
  PiecewiseConstantFn fbar(g, j.at("equivariant").get<bool>());
  for (const auto& e : j.at("entries"))
    fbar.set(matrix_from_json(e.at("L")), matrix_from_json(e.at("A")));
  return fbar;
}

// Reports.

inline Json report_to_json(const VerificationReport& r) {
  Json j;
  j["property"] = r.property;
  j["scope"] = r.scope;
  j["pass"] = r.pass;
  if (!r.counterexample.empty()) j["counterexample"] = r.counterexample;
  j["metrics"] = r.metrics;
  j["seed"] = r.seed;
  return j;
}

inline Json reports_to_json(const std::vector<VerificationReport>& reports) {
  Json out = Json::array();
  for (const auto& r : reports) out.push_back(report_to_json(r));
  return out;
}

inline std::string reports_to_csv(const std::vector<VerificationReport>& reports) {
  std::string csv = "property,scope,pass,metric,value\n";
  for (const auto& r : reports) {
    if (r.metrics.empty()) {
      csv += r.property + ",\"" + r.scope + "\"," + (r.pass ? "1" : "0") + ",,\n";
      continue;
    }
    for (const auto& [k, v] : r.metrics) {
      std::ostringstream os;
      os << v;
      csv += r.property + ",\"" + r.scope + "\"," + (r.pass ? "1" : "0") + "," + k + "," +
             os.str() + "\n";
    }
  }
  return csv;
}

inline Json dp_to_json(const DpEstimate& e, double p) {
  return Json{{"p", p},
              {"exact", e.exact},
              {"monte_carlo", e.monte_carlo},
              {"mc_std_error", e.mc_std_error},
              {"samples", e.samples},
              {"seed", e.seed}};
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << content;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input file: " + path);
  return Json::parse(in);
}

}  // namespace seq2seq
