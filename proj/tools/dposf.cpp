#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "dposf/cli.hpp"
#include "dposf/errors.hpp"

namespace {

std::string default_out_dir() {
  const char* env = std::getenv(std::string(dposf::kOutDirEnv).c_str());
  return env && *env ? env : "dposf-out";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace dposf;
  CLI::App app{"Forensics toolkit for delegated proof-of-stake voting ledgers"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string out_dir = default_out_dir();

  GenerateRequest gen;
  std::uint64_t gen_seed = 0;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic ledger with planted anomalies");
  generate->add_option("--config", gen.config_path, "Generator config file")->required();
  generate->add_option("--out", out_dir, "Output directory (default $DPOSF_OUT_DIR or ./dposf-out)");
  auto* seed_opt = generate->add_option("--seed", gen_seed, "Override the config seed");

  AnalyzeRequest an;
  std::string entropy_n = "10,20,all";
  std::string headers;
  const std::vector<std::pair<const char*, Analysis>> analyses = {
      {"replay", Analysis::Replay}, {"metrics", Analysis::Metrics}, {"cluster", Analysis::Cluster},
      {"motifs", Analysis::Motifs}, {"gangs", Analysis::Gangs},     {"all", Analysis::All}};
  std::map<CLI::App*, Analysis> analysis_of;
  for (const auto& [name, kind] : analyses) {
    auto* sub = app.add_subcommand(name, std::string("Run the ") + name + " analysis");
    analysis_of[sub] = kind;
    sub->add_option("--trace", an.trace_path, "Action trace (JSON lines)")->required();
    sub->add_option("--headers", headers, "Block headers (JSON lines)");
    sub->add_option("--out", out_dir, "Output directory (default $DPOSF_OUT_DIR or ./dposf-out)");
    sub->add_option("--theta", an.params.theta, "Similarity threshold for voter clustering")->capture_default_str();
    sub->add_option("--window-days", an.params.window_days, "Motif window in days")->capture_default_str();
    sub->add_option("--top-stake-pct", an.params.top_stake_pct, "Richest voters to cluster, percent")->capture_default_str();
    sub->add_option("--outlier-pct", an.params.outlier_pct, "Near-clique cutoff, percent of scored candidates")->capture_default_str();
    sub->add_option("--entropy-n", entropy_n, "Top-n producer counts for entropy, e.g. 10,20,all")->capture_default_str();
    sub->add_flag("--entropy-global", an.params.entropy_global, "Entropy over top-n with the month's global total");
    sub->add_flag("--strict-eight", an.params.strict_eight, "Eight-shaped motifs need two distinct proxies");
    sub->add_option("--seed", an.params.seed, "Community detection seed")->capture_default_str();
    sub->add_option("--snapshot-cadence", an.params.cadence, "monthly, <n>d, <n>h or <n>s")->capture_default_str();
  }

  ScoreRequest sc;
  auto* score = app.add_subcommand("score", "Score reports against generator ground truth");
  score->add_option("--report-dir", sc.report_dir, "Directory holding analysis reports")->required();
  score->add_option("--truth", sc.truth_path, "truth.json from generate")->required();
  score->add_option("--out", out_dir, "Output directory (default: the report directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (generate->parsed()) {
    gen.out_dir = out_dir;
    if (*seed_opt) gen.seed = gen_seed;
    return cmd_generate(gen, std::cerr);
  }
  if (score->parsed()) {
    sc.out_dir = score->count("--out") ? out_dir : sc.report_dir;
    return cmd_score_truth(sc, std::cerr);
  }
  for (const auto& [sub, kind] : analysis_of) {
    if (!sub->parsed()) continue;
    an.analysis = kind;
    an.out_dir = out_dir;
    if (!headers.empty()) an.headers_path = headers;
    try {
      an.params.entropy_n = parse_entropy_n(entropy_n);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitUsage;
    }
    return cmd_analyze(an, std::cerr);
  }
  return kExitUsage;
}
