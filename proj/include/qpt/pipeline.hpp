#pragma once

// Run configuration and the simulate -> sample -> fit -> region stages
// behind the command-line tool. All file output goes through here.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qpt/io.hpp"
#include "qpt/regions.hpp"

namespace qpt {

struct SimulationSpec {
  CMatrix true_choi;
  ChannelDims dims;
  Scheme scheme = Scheme::AncillaAssisted;
  SettingsKind settings = SettingsKind::PauliQubit;
  int n_qubits = 1;
  std::optional<CMatrix> sigma_a;
  std::int64_t shots_per_setting = 0;
  std::uint64_t seed = 0;
};

struct HistogramSpec {
  int bins = 50;
  std::optional<double> lo, hi;  // default: sample range
};

struct RegionSpec {
  double eps = 0.01;
  BinomMode binom_mode = BinomMode::Exact;
  bool paper_compat = false;
  FitModel tail_model = FitModel::One;
};

struct RunConfig {
  std::optional<std::filesystem::path> dataset;
  std::optional<SimulationSpec> simulation;
  std::optional<std::filesystem::path> histogram;  // input of `fit`, default <out>/histogram.csv
  std::optional<std::filesystem::path> fit;        // input of `region`, default <out>/fit.json
  FigureSpec figure{FigureKind::DiamondDistance, std::nullopt};
  WalkerConfig walker;
  int chains = 0;  // 0: one per available thread
  HistogramSpec histogram_spec;
  RegionSpec region;
  std::optional<std::int64_t> region_n;  // for `region` without a dataset
  std::optional<ChannelDims> region_dims;
  std::vector<double> alpha_sweep;
  std::filesystem::path output = "out";
};

/// Input paths are resolved against base_dir, the output directory against
/// the working directory. Unknown keys are errors.
RunConfig parse_run_config(const Json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& p);

Dataset build_dataset(const RunConfig& cfg);

struct SampleOutcome {
  std::vector<ChainResult> chains;
  std::vector<std::string> failures;  // per chain, empty when it succeeded
  Histogram histogram;
};

/// Runs the chains; a failing chain does not discard the others. Throws
/// after writing nothing only when every chain failed.
SampleOutcome sample_stage(const RunConfig& cfg, const Dataset& ds);
int chain_count(const RunConfig& cfg);

struct FitOutcome {
  FitParams one;
  std::optional<FitParams> two;
  std::string two_error;
  QuantumErrorBars qeb;
};

FitOutcome fit_stage(const Histogram& h, const FigureSpec& figure);
ConfidenceReport region_stage(const FitParams& fp, const RunConfig& cfg, std::int64_t n, const ChannelDims& dims);

/// Least-squares slope of ln y against ln x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

// File formats
void write_chain_csv(const std::filesystem::path& p, const ChainResult& c);
void write_histogram_csv(const std::filesystem::path& p, const Histogram& h);
Histogram read_histogram_csv(const std::filesystem::path& p);
Json fit_params_to_json(const FitParams& fp);
FitParams fit_params_from_json(const Json& j);
Json qeb_to_json(const QuantumErrorBars& q);
Json report_to_json(const ConfidenceReport& r);

struct CliOptions {
  std::filesystem::path config;
  bool paper_compat = false;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
};

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitIo = 3, kExitWalker = 4, kExitFit = 5, kExitDegenerate = 6 };

/// Runs simulate | sample | fit | region | analyze and returns the exit code.
/// Messages go to stderr, short results to stdout.
int run_command(const std::string& command, const CliOptions& opts);

}  // namespace qpt
