// Command-line driver: parses arguments into a RunConfig and dispatches to
// the library's run() entry point.  See README.md for document schemas.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "hfcert/cli.hpp"

namespace {

bool parse_synthetic_spec(const std::string& spec, hfcert::RunConfig& cfg) {
  const auto comma = spec.find(',');
  if (comma == std::string::npos) return false;
  try {
    cfg.synth_nu = std::stol(spec.substr(0, comma));
    cfg.synth_n = std::stol(spec.substr(comma + 1));
  } catch (const std::exception&) {
    return false;
  }
  cfg.synthetic = true;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified critical points of the discretized Hartree-Fock energy"};
  app.require_subcommand(1);

  hfcert::RunConfig cfg;
  std::string synthetic_spec;

  const char* const commands[] = {"validate",      "conditions", "certify",
                                  "solve",         "report",     "orthogonalize"};
  const char* const descriptions[] = {
      "check integral-set and weight invariants",
      "measure the localization/interaction condition constants",
      "evaluate the Newton-Kantorovich certificate gates",
      "run the certified Newton iteration to a critical point",
      "bundle validation, conditions, certificate, and solve trace",
      "orthonormalize a near-orthonormal basis and transform the integrals"};

  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(commands[i], descriptions[i]);
    sub->add_option("input", cfg.input, "integralset.v1 document");
    sub->add_option("--synthetic", synthetic_spec,
                    "generate the input instead: basis size and electron count as nu,N");
    sub->add_option("--seed", cfg.seed, "synthetic generator seed");
    sub->add_option("--gap", cfg.synth_params.gap, "synthetic occupied/virtual splitting");
    sub->add_option("--coupling", cfg.synth_params.coupling,
                    "synthetic occupied-virtual coupling");
    sub->add_option("--decay", cfg.synth_params.decay,
                    "synthetic off-diagonal decay rate");
    sub->add_option("--weights", cfg.weights_path,
                    "weights.v1 document overriding embedded weights");
    sub->add_option("--gram", cfg.gram_path, "gram.v1 overlap document");
    sub->add_option("-o,--output", cfg.output, "write the report here (default: stdout)");
    sub->add_option("--tol", cfg.tol, "Newton convergence tolerance");
    sub->add_option("--max-iter", cfg.max_iter, "Newton iteration budget");
    sub->add_flag("--recenter", cfg.recenter, "re-anchor the Newton chart every step");
  }

  CLI11_PARSE(app, argc, argv);
  cfg.command = app.get_subcommands().front()->get_name();
  if (!synthetic_spec.empty() && !parse_synthetic_spec(synthetic_spec, cfg)) {
    std::fprintf(stderr, "error: --synthetic expects nu,N (e.g. --synthetic 6,2)\n");
    return 3;
  }
  return hfcert::run(cfg);
}
