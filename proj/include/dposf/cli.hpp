#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "dposf/ledger.hpp"

namespace dposf {

inline constexpr std::string_view kToolVersion = "0.3.0";
inline constexpr std::string_view kOutDirEnv = "DPOSF_OUT_DIR";

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3 };

enum class Analysis { Replay, Metrics, Cluster, Motifs, Gangs, All };

std::string_view to_string(Analysis a) noexcept;

struct AnalysisParams {
  double theta = 0.9;
  int window_days = 7;
  double top_stake_pct = 5.0;
  double outlier_pct = 10.0;
  std::vector<std::optional<std::size_t>> entropy_n = {10, 20, std::nullopt};  // nullopt = all
  bool entropy_global = false;
  bool strict_eight = false;
  std::uint64_t seed = 7;
  std::string cadence = "monthly";
};

/// "10,20,all" style list. Throws ConfigError.
std::vector<std::optional<std::size_t>> parse_entropy_n(std::string_view text);

/// Range checks with the messages the CLI reports. Throws ConfigError.
void validate(const AnalysisParams& params);

struct AnalyzeRequest {
  Analysis analysis = Analysis::All;
  std::string trace_path;
  std::optional<std::string> headers_path;
  std::string out_dir;
  AnalysisParams params;
};

struct GenerateRequest {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

struct ScoreRequest {
  std::string report_dir;
  std::string truth_path;
  std::string out_dir;
};

/// Each returns an ExitCode and writes diagnostics to `err`. Reports land in `out_dir`.
int cmd_generate(const GenerateRequest& req, std::ostream& err);
int cmd_analyze(const AnalyzeRequest& req, std::ostream& err);
int cmd_score_truth(const ScoreRequest& req, std::ostream& err);

struct PairScore {
  std::size_t true_positive = 0;
  std::size_t predicted = 0;
  std::size_t actual = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

using Group = std::set<AccountName>;

/// Co-membership pairs of `predicted` vs `truth`. When `focus` is given, only predicted pairs touching
/// a focus account count toward precision.
PairScore pairwise_score(const std::vector<Group>& predicted, const std::vector<Group>& truth,
                         const std::set<AccountName>* focus = nullptr);

/// Plain set comparison of labelled items.
PairScore set_score(const std::set<std::string>& predicted, const std::set<std::string>& truth);

}  // namespace dposf
