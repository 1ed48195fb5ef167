#pragma once

// Versioned JSON documents for integral sets, Gram matrices, measured
// condition constants, certificates, and solver traces.
//
// Conventions shared by every schema: complex numbers are two-element
// arrays [re, im]; matrices are arrays of row arrays; the two-electron
// tensor is a flat row-major array of length nu^4 in (j,k,l,m) order.
// Members are emitted in a fixed order and floats as shortest round-trip
// decimals (17 significant digits at most), so identical data produces
// byte-identical documents.  Unknown members are ignored on input; an
// unknown "schema" value is rejected.  Files are written to a temporary
// name in the target directory and atomically renamed into place.

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hfcert/conditions.hpp"
#include "hfcert/integrals.hpp"
#include "hfcert/kantorovich.hpp"
#include "hfcert/matnorm.hpp"
#include "hfcert/ortho.hpp"
#include "hfcert/types.hpp"

namespace hfcert {

using ojson = nlohmann::ordered_json;

namespace io {

// ---------------------------------------------------------------------------
// encoding

inline ojson encode(const Cplx& z) { return ojson::array({z.real(), z.imag()}); }

inline ojson encode(const CMat& m) {
  ojson rows = ojson::array();
  for (Index j = 0; j < m.rows(); ++j) {
    ojson row = ojson::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(encode(m(j, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ojson encode(const RMat& m) {
  ojson rows = ojson::array();
  for (Index j = 0; j < m.rows(); ++j) {
    ojson row = ojson::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(j, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ojson encode(const RVec& v) {
  ojson out = ojson::array();
  for (Index j = 0; j < v.size(); ++j) out.push_back(v(j));
  return out;
}

inline ojson encode(const std::vector<std::array<double, 3>>& pts) {
  ojson out = ojson::array();
  for (const auto& p : pts) out.push_back(ojson::array({p[0], p[1], p[2]}));
  return out;
}

// ---------------------------------------------------------------------------
// decoding (every failure is an InvalidInput naming the offending member)

inline const ojson& member(const ojson& doc, const std::string& key) {
  if (!doc.is_object() || !doc.contains(key))
    throw InvalidInput("document: missing member '" + key + "'");
  return doc.at(key);
}

inline double decode_double(const ojson& j, const std::string& what) {
  if (!j.is_number()) throw InvalidInput(what + ": expected a number");
  return j.get<double>();
}

inline Index decode_index(const ojson& j, const std::string& what) {
  if (!j.is_number_integer()) throw InvalidInput(what + ": expected an integer");
  return j.get<Index>();
}

inline Cplx decode_cplx(const ojson& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2)
    throw InvalidInput(what + ": expected a [re, im] pair");
  return {decode_double(j[0], what), decode_double(j[1], what)};
}

inline CMat decode_cmat(const ojson& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InvalidInput(what + ": expected a matrix");
  const Index rows = Index(j.size());
  const Index cols = j[0].is_array() ? Index(j[0].size()) : -1;
  if (cols <= 0) throw InvalidInput(what + ": expected rows of entries");
  CMat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const ojson& row = j[std::size_t(r)];
    if (!row.is_array() || Index(row.size()) != cols)
      throw InvalidInput(what + ": ragged rows");
    for (Index c = 0; c < cols; ++c) m(r, c) = decode_cplx(row[std::size_t(c)], what);
  }
  return m;
}

inline RMat decode_rmat(const ojson& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InvalidInput(what + ": expected a matrix");
  const Index rows = Index(j.size());
  const Index cols = j[0].is_array() ? Index(j[0].size()) : -1;
  if (cols <= 0) throw InvalidInput(what + ": expected rows of entries");
  RMat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const ojson& row = j[std::size_t(r)];
    if (!row.is_array() || Index(row.size()) != cols)
      throw InvalidInput(what + ": ragged rows");
    for (Index c = 0; c < cols; ++c) m(r, c) = decode_double(row[std::size_t(c)], what);
  }
  return m;
}

inline std::vector<std::array<double, 3>> decode_points(const ojson& j,
                                                        const std::string& what) {
  if (!j.is_array()) throw InvalidInput(what + ": expected an array of points");
  std::vector<std::array<double, 3>> out;
  out.reserve(j.size());
  for (const ojson& p : j) {
    if (!p.is_array() || p.size() != 3)
      throw InvalidInput(what + ": expected [x, y, z] triples");
    out.push_back({decode_double(p[0], what), decode_double(p[1], what),
                   decode_double(p[2], what)});
  }
  return out;
}

inline void expect_schema(const ojson& doc, const std::string& name) {
  const ojson& tag = member(doc, "schema");
  if (!tag.is_string() || tag.get<std::string>() != name)
    throw InvalidInput("document: unknown schema (expected '" + name + "')");
}

// ---------------------------------------------------------------------------
// integralset.v1

inline ojson integralset_to_json(const IntegralSet& is, const WeightSet* ws = nullptr) {
  ojson doc;
  doc["schema"] = "integralset.v1";
  doc["nu"] = is.nu;
  doc["n_elec"] = is.n_elec;
  doc["charges"] = is.charges;
  doc["positions"] = encode(is.positions);
  doc["h"] = encode(is.h);
  doc["kinetic"] = encode(is.kinetic);
  ojson attr = ojson::array();
  for (const CMat& a : is.attraction) attr.push_back(encode(a));
  doc["attraction"] = std::move(attr);
  ojson eri = ojson::array();
  for (const Cplx& z : is.eri) eri.push_back(encode(z));
  doc["eri"] = std::move(eri);
  if (ws != nullptr) {
    doc["weights"] = encode(ws->w);
    if (!ws->points.empty()) doc["points"] = encode(ws->points);
  }
  return doc;
}

struct LoadedSystem {
  IntegralSet integrals;
  std::optional<WeightSet> weights;
};

inline LoadedSystem integralset_from_json(const ojson& doc) {
  expect_schema(doc, "integralset.v1");
  LoadedSystem out;
  IntegralSet& is = out.integrals;
  is.nu = decode_index(member(doc, "nu"), "nu");
  is.n_elec = decode_index(member(doc, "n_elec"), "n_elec");
  if (is.nu <= 0) throw InvalidInput("nu: must be positive");

  const ojson& charges = member(doc, "charges");
  if (!charges.is_array()) throw InvalidInput("charges: expected an array");
  for (const ojson& c : charges)
    is.charges.push_back(int(decode_index(c, "charges")));
  is.positions = decode_points(member(doc, "positions"), "positions");

  is.h = decode_cmat(member(doc, "h"), "h");
  is.kinetic = decode_cmat(member(doc, "kinetic"), "kinetic");
  const ojson& attr = member(doc, "attraction");
  if (!attr.is_array()) throw InvalidInput("attraction: expected an array");
  for (const ojson& a : attr) is.attraction.push_back(decode_cmat(a, "attraction"));

  const ojson& eri = member(doc, "eri");
  const Index n4 = is.nu * is.nu * is.nu * is.nu;
  if (!eri.is_array() || Index(eri.size()) != n4)
    throw InvalidInput("eri: expected a flat array of length nu^4");
  is.eri.reserve(std::size_t(n4));
  for (const ojson& z : eri) is.eri.push_back(decode_cplx(z, "eri"));

  if (doc.contains("weights")) {
    WeightSet ws;
    ws.w = decode_rmat(doc.at("weights"), "weights");
    if (doc.contains("points")) ws.points = decode_points(doc.at("points"), "points");
    out.weights = std::move(ws);
  }
  return out;
}

// ---------------------------------------------------------------------------
// gram.v1

inline ojson gram_to_json(const CMat& gram) {
  ojson doc;
  doc["schema"] = "gram.v1";
  doc["nu"] = gram.rows();
  doc["gram"] = encode(gram);
  return doc;
}

inline CMat gram_from_json(const ojson& doc) {
  expect_schema(doc, "gram.v1");
  const CMat gram = decode_cmat(member(doc, "gram"), "gram");
  const Index nu = decode_index(member(doc, "nu"), "nu");
  if (gram.rows() != nu || gram.cols() != nu)
    throw InvalidInput("gram: dimensions do not match nu");
  return gram;
}

// ---------------------------------------------------------------------------
// conditions.v1 (output document)

inline ojson feasibility_to_json(const ConditionFeasibility& f) {
  ojson doc;
  doc["eps_tilde_lt_one"] = f.eps_tilde_lt_one;
  doc["eps_lt_one"] = f.eps_lt_one;
  doc["gamma_positive"] = f.gamma_positive;
  doc["denominator_positive"] = f.denominator_positive;
  return doc;
}

inline ojson conditions_to_json(const ConditionReport& rep) {
  ojson doc;
  doc["schema"] = "conditions.v1";
  doc["eps_tilde"] = rep.eps_tilde;
  doc["c_tilde"] = rep.c_tilde;
  doc["c_hat"] = rep.c_hat;
  doc["c_check"] = rep.c_check;
  doc["c_breve"] = rep.c_breve;
  doc["eps"] = rep.eps;
  doc["delta"] = rep.delta;
  doc["gamma"] = rep.gamma;
  doc["feasibility"] = feasibility_to_json(rep.feasibility);
  if (rep.v_inv.size() > 0) doc["v_inv"] = encode(rep.v_inv);
  if (rep.u_inv.size() > 0) doc["u_inv"] = encode(rep.u_inv);
  if (!rep.u_breve_inv.empty()) {
    ojson arr = ojson::array();
    for (const RMat& m : rep.u_breve_inv) arr.push_back(encode(m));
    doc["u_breve_inv"] = std::move(arr);
  }
  return doc;
}

// ---------------------------------------------------------------------------
// certificate.v1 (output document)

inline ojson certificate_to_json(const KantorovichCertificate& cert) {
  ojson doc;
  doc["schema"] = "certificate.v1";
  doc["denominator"] = cert.denominator;
  doc["c_star"] = cert.c_star;
  doc["eps"] = cert.eps;
  doc["eps_hat"] = cert.eps_hat;
  doc["big_c"] = cert.big_c;
  doc["big_d"] = cert.big_d;
  doc["big_l"] = cert.big_l;
  doc["theta"] = cert.theta;
  doc["tau_star"] = cert.tau_star;
  doc["tau_star_alt"] = cert.tau_star_alt;
  doc["tau_star_star"] = cert.tau_star_star;
  doc["r"] = cert.r;
  doc["displacement_bound"] = cert.displacement_bound;
  ojson gates;
  gates["positivity"] = cert.gates.positivity;
  gates["theta_lt_half"] = cert.gates.theta_lt_half;
  gates["eps_hat_gt_tau_star"] = cert.gates.eps_hat_gt_tau_star;
  doc["gates"] = std::move(gates);
  doc["valid"] = cert.valid;
  return doc;
}

// ---------------------------------------------------------------------------
// trace.v1 (output document)

inline ojson trace_to_json(const NewtonTrace& trace, double commutator_res) {
  ojson doc;
  doc["schema"] = "trace.v1";
  doc["converged"] = trace.converged;
  doc["iterations"] = trace.iterates.empty() ? 0 : Index(trace.iterates.size()) - 1;
  ojson its = ojson::array();
  for (const NewtonIterate& it : trace.iterates) {
    ojson entry;
    entry["residual_norm"] = it.residual_norm;
    entry["step_norm"] = it.step_norm;
    its.push_back(std::move(entry));
  }
  doc["iterates"] = std::move(its);
  doc["final_point"] = encode(trace.final_point.p);
  doc["commutator_residual"] = commutator_res;
  return doc;
}

// ---------------------------------------------------------------------------
// validation / orthogonalization members (embedded in CLI outputs)

inline ojson integral_report_to_json(const IntegralReport& rep) {
  ojson doc;
  doc["ok"] = rep.ok();
  ojson arr = ojson::array();
  for (const IntegralViolation& v : rep.violations) {
    ojson entry;
    entry["check"] = v.check;
    entry["index"] = ojson::array({v.index[0], v.index[1], v.index[2], v.index[3]});
    entry["magnitude"] = v.magnitude;
    entry["count"] = v.count;
    arr.push_back(std::move(entry));
  }
  doc["violations"] = std::move(arr);
  return doc;
}

inline ojson weight_report_to_json(const WeightReport& rep) {
  ojson doc;
  doc["ok"] = rep.ok();
  ojson arr = ojson::array();
  for (const WeightViolation& v : rep.violations) {
    ojson entry;
    entry["clause"] = v.clause;
    entry["index"] = ojson::array({v.j, v.k, v.l});
    entry["lhs"] = v.lhs;
    entry["rhs"] = v.rhs;
    arr.push_back(std::move(entry));
  }
  doc["violations"] = std::move(arr);
  return doc;
}

inline ojson ortho_to_json(const OrthoResult& res, double residual_eps0) {
  ojson doc;
  doc["eps0"] = res.eps0;
  doc["eps1"] = res.eps1;
  doc["eps2"] = res.eps2;
  doc["eps3"] = res.eps3;
  doc["eps4"] = res.eps4;
  doc["s_weighted_norm"] = res.s_weighted_norm;
  doc["residual_eps0"] = residual_eps0;
  doc["norms"] = encode(res.norms);
  doc["c"] = encode(res.c);
  doc["s"] = encode(res.s);
  return doc;
}

// ---------------------------------------------------------------------------
// file transport

inline std::string render_document(const ojson& doc) { return doc.dump(2) + "\n"; }

inline ojson parse_document(const std::string& text) {
  ojson doc = ojson::parse(text, nullptr, false);
  if (doc.is_discarded()) throw InvalidInput("document: malformed JSON");
  return doc;
}

inline ojson load_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("io: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_document(buf.str());
}

// Writes to a sibling temporary file and renames over the target so readers
// never observe a half-written document.
inline void write_document(const std::string& path, const ojson& doc) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp(path + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("io: cannot write '" + tmp.string() + "'");
    out << render_document(doc);
    out.flush();
    if (!out) throw InvalidInput("io: short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InvalidInput("io: cannot rename into '" + path + "'");
  }
}

}  // namespace io
}  // namespace hfcert
