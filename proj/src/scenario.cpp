#include "auxiva/scenario.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "auxiva/errors.hpp"
#include "auxiva/keyvalue.hpp"
#include "auxiva/wav.hpp"

namespace auxiva {

namespace {

// Stream identifiers mixed into the seed so sources and mixing draw from
// independent generators.
constexpr std::uint64_t kSourceStream = 0x51;
constexpr std::uint64_t kMixingStream = 0x6d;
constexpr std::uint64_t kMoveStream = 0x4d;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

constexpr int kEnvelopePartials = 16;
constexpr double kEnvelopeDepth = 1.0;  // log-amplitude standard deviation
constexpr double kMaxEchoSeconds = 0.064;

Eigen::VectorXd random_unit_column(int K, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd c(K);
  do {
    for (int i = 0; i < K; ++i) c(i) = g(rng);
  } while (c.norm() < 1e-6);
  return c / c.norm();
}

Filter synthetic_echo(double direct_gain, double sample_rate, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ntaps(3, 5);
  const int max_delay = static_cast<int>(kMaxEchoSeconds * sample_rate) - 1;
  std::uniform_int_distribution<int> direct_delay(0, 16);
  std::uniform_int_distribution<int> echo_delay(32, max_delay);
  std::uniform_real_distribution<double> amp(0.1, 0.5);
  std::bernoulli_distribution sign(0.5);

  const int taps = ntaps(rng);
  Filter h(static_cast<std::size_t>(max_delay + 1), 0.0);
  const int d0 = direct_delay(rng);
  h[d0] = direct_gain;
  for (int i = 1; i < taps; ++i) {
    const int d = echo_delay(rng);
    const double decay = std::exp(-3.0 * d / static_cast<double>(max_delay));
    h[d] += (sign(rng) ? 1.0 : -1.0) * amp(rng) * decay * std::abs(direct_gain);
  }
  while (h.size() > 1 && h.back() == 0.0) h.pop_back();
  return h;
}

FilterBank filters_from_matrix(const Eigen::MatrixXd& A) {
  FilterBank bank(A.rows(), std::vector<Filter>(A.cols()));
  for (Eigen::Index m = 0; m < A.rows(); ++m)
    for (Eigen::Index k = 0; k < A.cols(); ++k) bank[m][k] = Filter{A(m, k)};
  return bank;
}

/// y += h * x restricted to [0, N), skipping zero taps.
void convolve_add(const Filter& h, const double* x, double* y, long N) {
  for (std::size_t j = 0; j < h.size(); ++j) {
    const double g = h[j];
    if (g == 0.0) continue;
    for (long n = static_cast<long>(j); n < N; ++n) y[n] += g * x[n - static_cast<long>(j)];
  }
}

}  // namespace

long ScenarioConfig::samples() const {
  return std::lround(duration * sample_rate);
}

void ScenarioConfig::validate() const {
  require(sources >= 1 && sources <= 8, "scenario: sources must lie in [1, 8]");
  require(duration > 0.0, "scenario: duration must be positive");
  require(sample_rate > 0.0, "scenario: sample_rate must be positive");
  require(max_condition >= 1.0, "scenario: max_condition must be at least 1");
  if (matrix.size() != 0) {
    require(matrix.rows() == sources && matrix.cols() == sources,
            "scenario: mixing matrix must be sources x sources");
  }
  if (!filters.empty()) {
    require(static_cast<int>(filters.size()) == sources, "scenario: filter bank needs one row per mic");
    for (const auto& row : filters) {
      require(static_cast<int>(row.size()) == sources, "scenario: filter bank needs one filter per source");
      for (const auto& h : row) require(!h.empty(), "scenario: empty filter");
    }
  }
  if (move) {
    require(move->source >= 0 && move->source < sources, "scenario: move source out of range");
    require(move->time_s > 0.0 && move->time_s < duration, "scenario: move time must lie inside the duration");
    if (move->column.size() != 0) {
      require(move->column.size() == sources, "scenario: move column has wrong length");
    }
    if (!move->filters.empty()) {
      require(static_cast<int>(move->filters.size()) == sources, "scenario: move filters need one per mic");
    }
  }
  if (!source_files.empty()) {
    require(static_cast<int>(source_files.size()) == sources, "scenario: need one source file per source");
  }
}

Signals synth_sources(int count, double duration, double sample_rate, std::uint64_t seed) {
  require(count >= 1, "synth_sources: count must be positive");
  require(duration > 0.0 && sample_rate > 0.0, "synth_sources: duration and rate must be positive");
  const long N = std::lround(duration * sample_rate);
  Signals out(count, N);
  for (int k = 0; k < count; ++k) {
    auto rng = make_rng(seed, kSourceStream, static_cast<std::uint64_t>(k));
    std::uniform_real_distribution<double> bw_dist(2.0, 8.0);
    const double bandwidth = bw_dist(rng);
    std::uniform_real_distribution<double> freq(0.0, bandwidth);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::array<double, kEnvelopePartials> f{}, p{};
    for (int i = 0; i < kEnvelopePartials; ++i) {
      f[i] = freq(rng);
      p[i] = phase(rng);
    }
    std::normal_distribution<double> g(0.0, 1.0);
    const double norm = std::sqrt(2.0 / kEnvelopePartials);
    double energy = 0.0;
    for (long n = 0; n < N; ++n) {
      const double time = n / sample_rate;
      double z = 0.0;
      for (int i = 0; i < kEnvelopePartials; ++i) z += std::cos(2.0 * std::numbers::pi * f[i] * time + p[i]);
      const double v = std::exp(kEnvelopeDepth * norm * z) * g(rng);
      out(k, n) = v;
      energy += v * v;
    }
    out.row(k) /= std::sqrt(energy / static_cast<double>(N));
  }
  return out;
}

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

Eigen::MatrixXd random_mixing_matrix(int K, double max_condition, std::uint64_t seed) {
  require(K >= 1, "random_mixing_matrix: K must be positive");
  require(max_condition >= 1.0, "random_mixing_matrix: max_condition must be at least 1");
  auto rng = make_rng(seed, kMixingStream, 0);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Eigen::MatrixXd A(K, K);
    for (int k = 0; k < K; ++k) A.col(k) = random_unit_column(K, rng);
    if (condition_number(A) <= max_condition) return A;
  }
  throw ContractViolation("random_mixing_matrix: no matrix met the condition bound");
}

MixingPlan plan_mixing(const ScenarioConfig& cfg) {
  cfg.validate();
  const int K = cfg.sources;
  MixingPlan plan;
  plan.kind = cfg.mixing;
  plan.sources = K;

  Eigen::MatrixXd A = cfg.matrix.size() != 0 ? cfg.matrix : random_mixing_matrix(K, cfg.max_condition, cfg.seed);
  require(std::isfinite(condition_number(A)) && condition_number(A) < 1e12,
          "scenario: mixing matrix is singular");
  plan.matrix_before = A;
  plan.matrix_after = A;

  if (cfg.mixing == MixingKind::Instantaneous) {
    plan.before = filters_from_matrix(A);
  } else if (!cfg.filters.empty()) {
    plan.before = cfg.filters;
  } else {
    auto rng = make_rng(cfg.seed, kMixingStream, 1);
    plan.before.assign(K, std::vector<Filter>(K));
    for (int m = 0; m < K; ++m)
      for (int k = 0; k < K; ++k) plan.before[m][k] = synthetic_echo(A(m, k), cfg.sample_rate, rng);
  }
  plan.after = plan.before;

  if (cfg.move) {
    const int ks = cfg.move->source;
    plan.move_source = ks;
    plan.switch_sample = static_cast<long>(std::floor(cfg.move->time_s * cfg.sample_rate));
    auto rng = make_rng(cfg.seed, kMoveStream, 0);
    Eigen::VectorXd column = cfg.move->column;
    if (column.size() == 0) {
      for (int attempt = 0;; ++attempt) {
        require(attempt < 100000, "scenario: no post-move column met the condition bound");
        Eigen::VectorXd c = random_unit_column(K, rng);
        Eigen::MatrixXd B = A;
        B.col(ks) = c;
        // Reject near-copies of the old column so the move is a real change.
        if (condition_number(B) <= cfg.max_condition && std::abs(c.dot(A.col(ks))) <= 0.7) {
          column = c;
          break;
        }
      }
    }
    plan.matrix_after.col(ks) = column;
    require(condition_number(plan.matrix_after) < 1e12, "scenario: post-move mixing matrix is singular");
    if (cfg.mixing == MixingKind::Instantaneous) {
      plan.after = filters_from_matrix(plan.matrix_after);
    } else if (!cfg.move->filters.empty()) {
      for (int m = 0; m < K; ++m) plan.after[m][ks] = cfg.move->filters[m];
    } else {
      for (int m = 0; m < K; ++m) plan.after[m][ks] = synthetic_echo(column(m), cfg.sample_rate, rng);
    }
  }
  return plan;
}

Signals GroundTruth::reference_images() const {
  Signals out(static_cast<Eigen::Index>(images.size()), mixtures.cols());
  for (std::size_t k = 0; k < images.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = images[k].row(0);
  return out;
}

GroundTruth mix(const MixingPlan& plan, const Signals& sources) {
  const int K = plan.sources;
  require(sources.rows() == K, "mix: source count does not match the plan");
  require(static_cast<int>(plan.before.size()) == K && static_cast<int>(plan.after.size()) == K,
          "mix: malformed filter bank");
  const long N = sources.cols();
  require(N > 0, "mix: empty sources");

  GroundTruth gt;
  gt.sources = sources;
  gt.mixtures = Signals::Zero(K, N);
  gt.images.assign(K, Signals::Zero(K, N));
  std::vector<double> head(static_cast<std::size_t>(N)), tail(static_cast<std::size_t>(N));

  for (int k = 0; k < K; ++k) {
    const bool moves = plan.has_move() && k == plan.move_source;
    const long split = moves ? std::clamp(plan.switch_sample, 0L, N) : N;
    for (long n = 0; n < N; ++n) {
      head[n] = n < split ? sources(k, n) : 0.0;
      tail[n] = n < split ? 0.0 : sources(k, n);
    }
    for (int m = 0; m < K; ++m) {
      double* dst = gt.images[k].row(m).data();
      convolve_add(plan.before[m][k], head.data(), dst, N);
      if (moves) convolve_add(plan.after[m][k], tail.data(), dst, N);
    }
    gt.mixtures += gt.images[k];
  }
  return gt;
}

GroundTruth simulate(const ScenarioConfig& cfg, MixingPlan* plan_out) {
  cfg.validate();
  Signals sources;
  if (cfg.source_files.empty()) {
    sources = synth_sources(cfg.sources, cfg.duration, cfg.sample_rate, cfg.seed);
  } else {
    const long N = cfg.samples();
    sources = Signals::Zero(cfg.sources, N);
    for (int k = 0; k < cfg.sources; ++k) {
      const WavData w = read_wav(cfg.source_files[k]);
      require(w.sample_rate == cfg.sample_rate, "scenario: source file sample rate mismatch");
      const long n = std::min<long>(N, w.samples.cols());
      sources.row(k).head(n) = w.samples.row(0).head(n);
    }
  }
  MixingPlan plan = plan_mixing(cfg);
  GroundTruth gt = mix(plan, sources);
  if (plan_out) *plan_out = std::move(plan);
  return gt;
}

// --------------------------------------------------------------------------
// Text config.

ScenarioConfig parse_scenario(const std::string& text, const std::string& origin) {
  const KeyValueFile kv = KeyValueFile::parse(text, origin);
  kv.check_keys({"sources", "duration", "sample_rate", "seed", "mixing", "mixing_matrix", "max_condition",
                 "move_source", "move_time", "move_column", "source_files"},
                {"filter.", "move_filter."});

  ScenarioConfig cfg;
  cfg.sources = static_cast<int>(kv.get_long("sources", cfg.sources));
  if (cfg.sources < 1 || cfg.sources > 8) kv.fail("sources", "must lie in [1, 8]");
  cfg.duration = kv.get_double("duration", cfg.duration);
  if (!(cfg.duration > 0)) kv.fail("duration", "must be positive");
  cfg.sample_rate = kv.get_double("sample_rate", cfg.sample_rate);
  if (!(cfg.sample_rate > 0)) kv.fail("sample_rate", "must be positive");
  const long seed = kv.get_long("seed", 1);
  if (seed < 0) kv.fail("seed", "must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.max_condition = kv.get_double("max_condition", cfg.max_condition);

  const std::string mixing = kv.get("mixing", "instantaneous");
  if (mixing == "instantaneous") {
    cfg.mixing = MixingKind::Instantaneous;
  } else if (mixing == "convolutive") {
    cfg.mixing = MixingKind::Convolutive;
  } else {
    kv.fail("mixing", "expected 'instantaneous' or 'convolutive'");
  }
  const int K = cfg.sources;

  if (kv.has("mixing_matrix")) {
    const auto v = kv.get_doubles("mixing_matrix");
    if (static_cast<int>(v.size()) != K * K) kv.fail("mixing_matrix", "expected sources^2 row-major entries");
    cfg.matrix.resize(K, K);
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) cfg.matrix(i, j) = v[static_cast<std::size_t>(i * K + j)];
  }

  const auto filter_keys = kv.keys_with_prefix("filter.");
  if (!filter_keys.empty()) {
    cfg.filters.assign(K, std::vector<Filter>(K));
    for (const auto& key : filter_keys) {
      int m = 0, k = 0;
      if (std::sscanf(key.c_str(), "filter.%d.%d", &m, &k) != 2 || m < 1 || m > K || k < 1 || k > K) {
        kv.fail(key, "expected filter.<mic>.<source> with 1-based indices");
      }
      cfg.filters[m - 1][k - 1] = kv.get_doubles(key);
      if (cfg.filters[m - 1][k - 1].empty()) kv.fail(key, "empty filter");
    }
    for (int m = 0; m < K; ++m)
      for (int k = 0; k < K; ++k)
        if (cfg.filters[m][k].empty()) {
          throw ConfigError(origin + ": filter." + std::to_string(m + 1) + "." + std::to_string(k + 1) +
                            " missing (all filters must be given)");
        }
  }

  if (kv.has("move_source") || kv.has("move_time")) {
    if (!kv.has("move_source")) kv.fail("move_time", "move_source is required with move_time");
    if (!kv.has("move_time")) kv.fail("move_source", "move_time is required with move_source");
    MoveSpec mv;
    const long src = kv.get_long("move_source", 0);
    if (src < 1 || src > K) kv.fail("move_source", "must be a 1-based source index");
    mv.source = static_cast<int>(src - 1);
    mv.time_s = kv.get_double("move_time", 0.0);
    if (!(mv.time_s > 0 && mv.time_s < cfg.duration)) kv.fail("move_time", "must lie strictly inside the duration");
    if (kv.has("move_column")) {
      const auto v = kv.get_doubles("move_column");
      if (static_cast<int>(v.size()) != K) kv.fail("move_column", "expected one entry per microphone");
      mv.column = Eigen::Map<const Eigen::VectorXd>(v.data(), K);
    }
    const auto mkeys = kv.keys_with_prefix("move_filter.");
    if (!mkeys.empty()) {
      mv.filters.assign(K, {});
      for (const auto& key : mkeys) {
        int m = 0;
        if (std::sscanf(key.c_str(), "move_filter.%d", &m) != 1 || m < 1 || m > K) {
          kv.fail(key, "expected move_filter.<mic> with a 1-based index");
        }
        mv.filters[m - 1] = kv.get_doubles(key);
      }
      for (const auto& h : mv.filters)
        if (h.empty()) throw ConfigError(origin + ": move_filter.<mic> must be given for every mic");
    }
    cfg.move = mv;
  }

  if (kv.has("source_files")) {
    cfg.source_files = kv.get_list("source_files");
    if (static_cast<int>(cfg.source_files.size()) != K) kv.fail("source_files", "expected one path per source");
  }
  try {
    cfg.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

}  // namespace auxiva
