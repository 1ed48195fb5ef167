#pragma once

// Batch entry point: loads an integral-set document (or generates a
// synthetic instance), runs the requested computation, and emits one JSON
// report document.  Exit codes: 0 success, 2 certificate gates failed
// (the run itself succeeded, the answer is negative), 3 invalid input,
// 4 solver failure.  Every gate failure is reported by name with its
// numeric margin, both in the document and on the diagnostic stream.

#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "hfcert/conditions.hpp"
#include "hfcert/hf.hpp"
#include "hfcert/integrals.hpp"
#include "hfcert/io.hpp"
#include "hfcert/kantorovich.hpp"
#include "hfcert/matnorm.hpp"
#include "hfcert/ortho.hpp"
#include "hfcert/types.hpp"

namespace hfcert {

struct RunConfig {
  std::string command;       // validate|conditions|certify|solve|orthogonalize|report
  std::string input;         // integralset.v1 path (empty when synthetic)
  std::string weights_path;  // optional weights.v1 path overriding embedded weights
  std::string gram_path;     // gram.v1 path (required by orthogonalize)
  std::string output;        // output path; empty = standard output
  double tol = 1e-10;
  int max_iter = 50;
  bool recenter = false;
  std::uint64_t seed = 1;
  bool synthetic = false;  // generate the input instead of reading a file
  Index synth_nu = 0, synth_n = 0;
  SyntheticParams synth_params;
};

namespace cli {

struct GateFailure {
  std::string gate;
  double margin = 0;  // positive would have passed
};

inline std::vector<GateFailure> failed_gates(const KantorovichCertificate& cert) {
  std::vector<GateFailure> out;
  if (!cert.gates.positivity)
    out.push_back({"positivity", cert.denominator});
  if (cert.gates.positivity && !cert.gates.theta_lt_half)
    out.push_back({"theta_lt_half", 0.5 - cert.theta});
  if (cert.gates.positivity && cert.gates.theta_lt_half && !cert.gates.eps_hat_gt_tau_star)
    out.push_back({"eps_hat_gt_tau_star", cert.eps_hat - cert.tau_star});
  return out;
}

inline ojson gate_failures_to_json(const std::vector<GateFailure>& fails) {
  ojson arr = ojson::array();
  for (const GateFailure& f : fails) {
    ojson entry;
    entry["gate"] = f.gate;
    entry["margin"] = f.margin;
    arr.push_back(std::move(entry));
  }
  return arr;
}

inline void print_gate_failures(const std::vector<GateFailure>& fails, std::ostream& err) {
  for (const GateFailure& f : fails)
    err << "gate " << f.gate << " failed (margin " << f.margin << ")\n";
}

struct System {
  IntegralSet integrals;
  std::optional<WeightSet> weights;
};

inline WeightSet weights_from_json_doc(const ojson& doc) {
  io::expect_schema(doc, "weights.v1");
  WeightSet ws;
  ws.w = io::decode_rmat(io::member(doc, "w"), "w");
  if (doc.contains("points")) ws.points = io::decode_points(doc.at("points"), "points");
  const Index nu = io::decode_index(io::member(doc, "nu"), "nu");
  if (ws.w.rows() != nu || ws.w.cols() != nu)
    throw InvalidInput("weights: dimensions do not match nu");
  return ws;
}

inline ojson weights_to_json_doc(const WeightSet& ws) {
  ojson doc;
  doc["schema"] = "weights.v1";
  doc["nu"] = ws.dim();
  doc["w"] = io::encode(ws.w);
  if (!ws.points.empty()) doc["points"] = io::encode(ws.points);
  return doc;
}

inline System load_system(const RunConfig& cfg) {
  System sys;
  if (cfg.synthetic) {
    auto syn = generate_synthetic(cfg.seed, cfg.synth_nu, cfg.synth_n, cfg.synth_params);
    sys.integrals = std::move(syn.integrals);
    sys.weights = std::move(syn.weights);
  } else {
    if (cfg.input.empty())
      throw InvalidInput("run: no input file (pass a path or --synthetic nu,N)");
    auto loaded = io::integralset_from_json(io::load_document(cfg.input));
    sys.integrals = std::move(loaded.integrals);
    sys.weights = std::move(loaded.weights);
  }
  if (!cfg.weights_path.empty())
    sys.weights = weights_from_json_doc(io::load_document(cfg.weights_path));
  return sys;
}

inline const WeightSet& require_weights(const System& sys) {
  if (!sys.weights)
    throw InvalidInput(
        "run: no weight matrix available (embed one in the document or pass --weights)");
  return *sys.weights;
}

inline void emit(const RunConfig& cfg, const ojson& doc, std::ostream& out) {
  if (cfg.output.empty())
    out << io::render_document(doc);
  else
    io::write_document(cfg.output, doc);
}

}  // namespace cli

inline int run(const RunConfig& cfg, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) try {
  if (!(cfg.tol > 0)) throw InvalidInput("run: tol must be positive");
  if (cfg.max_iter < 1) throw InvalidInput("run: max_iter must be at least 1");

  const cli::System sys = cli::load_system(cfg);
  const IntegralSet& is = sys.integrals;

  if (cfg.command == "validate") {
    ojson doc;
    doc["schema"] = "validation.v1";
    const IntegralReport irep = validate(is);
    doc["integrals"] = io::integral_report_to_json(irep);
    bool ok = irep.ok();
    if (sys.weights) {
      const WeightReport wrep = validate_weights(*sys.weights);
      doc["weights"] = io::weight_report_to_json(wrep);
      ok = ok && wrep.ok();
    }
    cli::emit(cfg, doc, out);
    if (!ok) err << "validation failed\n";
    return ok ? 0 : 3;
  }

  if (cfg.command == "conditions") {
    const auto rep = measure_conditions(is, cli::require_weights(sys));
    cli::emit(cfg, io::conditions_to_json(rep), out);
    return 0;
  }

  if (cfg.command == "certify") {
    const auto rep = measure_conditions(is, cli::require_weights(sys));
    const auto cert = certify(rep);
    ojson doc = io::certificate_to_json(cert);
    const auto fails = cli::failed_gates(cert);
    if (!fails.empty()) doc["failed_gates"] = cli::gate_failures_to_json(fails);
    cli::emit(cfg, doc, out);
    cli::print_gate_failures(fails, err);
    return cert.valid ? 0 : 2;
  }

  if (cfg.command == "solve") {
    NewtonOptions opts;
    opts.tol = cfg.tol;
    opts.max_iter = cfg.max_iter;
    opts.recenter = cfg.recenter;
    const NewtonTrace trace = newton_solve(is, opts);
    ojson doc = io::trace_to_json(trace, commutator_residual(trace.final_point, is));
    if (sys.weights) {
      const auto cert = certify(measure_conditions(is, *sys.weights));
      if (cert.valid) {
        const auto disp =
            displacement_check(trace.final_point, canonical_point(is.n_elec, is.nu), cert);
        ojson d;
        d["measured"] = disp.measured;
        d["bound"] = disp.bound;
        d["pass"] = disp.pass;
        doc["displacement"] = std::move(d);
      }
    }
    cli::emit(cfg, doc, out);
    if (!trace.converged) {
      err << "solver did not converge within " << cfg.max_iter << " iterations\n";
      return 4;
    }
    return 0;
  }

  if (cfg.command == "orthogonalize") {
    if (cfg.gram_path.empty())
      throw InvalidInput("run: orthogonalize requires --gram <path>");
    const CMat gram = io::gram_from_json(io::load_document(cfg.gram_path));
    const WeightSet& ws = cli::require_weights(sys);
    const auto pipe = orthogonalize_pipeline(is, gram, ws);
    ojson doc = io::integralset_to_json(pipe.integrals, &ws);
    ojson ortho = io::ortho_to_json(pipe.ortho, pipe.residual_eps0);
    if (pipe.ortho.eps0 < 0.5) {
      const auto prop = propagate_constants(measure_conditions(is, ws), pipe.ortho.eps0);
      ortho["propagated_conditions"] = io::conditions_to_json(prop);
    }
    doc["ortho"] = std::move(ortho);
    cli::emit(cfg, doc, out);
    return 0;
  }

  if (cfg.command == "report") {
    ojson doc;
    doc["schema"] = "report.v1";
    const IntegralReport irep = validate(is);
    doc["validation"] = io::integral_report_to_json(irep);
    if (sys.weights) {
      const WeightReport wrep = validate_weights(*sys.weights);
      doc["weights_validation"] = io::weight_report_to_json(wrep);
      if (!wrep.ok()) {
        cli::emit(cfg, doc, out);
        err << "validation failed\n";
        return 3;
      }
    }
    if (!irep.ok()) {
      cli::emit(cfg, doc, out);
      err << "validation failed\n";
      return 3;
    }

    const auto rep = measure_conditions(is, cli::require_weights(sys));
    doc["conditions"] = io::conditions_to_json(rep);
    const auto cert = certify(rep);
    doc["certificate"] = io::certificate_to_json(cert);
    const auto fails = cli::failed_gates(cert);
    if (!fails.empty()) doc["failed_gates"] = cli::gate_failures_to_json(fails);
    if (!cert.valid) {
      cli::emit(cfg, doc, out);
      cli::print_gate_failures(fails, err);
      return 2;
    }

    NewtonOptions opts;
    opts.tol = cfg.tol;
    opts.max_iter = cfg.max_iter;
    opts.recenter = cfg.recenter;
    const NewtonTrace trace = newton_solve(is, opts);
    ojson tdoc = io::trace_to_json(trace, commutator_residual(trace.final_point, is));
    const auto disp =
        displacement_check(trace.final_point, canonical_point(is.n_elec, is.nu), cert);
    ojson d;
    d["measured"] = disp.measured;
    d["bound"] = disp.bound;
    d["pass"] = disp.pass;
    tdoc["displacement"] = std::move(d);
    doc["trace"] = std::move(tdoc);
    cli::emit(cfg, doc, out);
    if (!trace.converged) {
      err << "solver did not converge within " << cfg.max_iter << " iterations\n";
      return 4;
    }
    return 0;
  }

  throw InvalidInput("run: unknown command '" + cfg.command + "'");
} catch (const SolverFailure& e) {
  err << "error: " << e.what() << "\n";
  return 4;
} catch (const ConsistencyError& e) {
  err << "error: " << e.what() << "\n";
  return 4;
} catch (const ConstructionFailed& e) {
  err << "error: " << e.what() << "\n";
  return 4;
} catch (const InvalidInput& e) {
  err << "error: " << e.what() << "\n";
  return 3;
} catch (const std::exception& e) {
  err << "error: " << e.what() << "\n";
  return 3;
}

}  // namespace hfcert
