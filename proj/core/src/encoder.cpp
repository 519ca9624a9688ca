#include "lcsac/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "lcsac/errors.hpp"
#include "lcsac/rng.hpp"
#include "lcsac/sac.hpp"

namespace lcsac {
namespace {

// Parameter layout inside EncoderParams::params (insertion order).
constexpr int kInW = 0;
constexpr int kInB = 1;
constexpr int kLstmWx = 2;
constexpr int kLstmWh = 3;
constexpr int kLstmB = 4;
constexpr int kMeanW = 5;
constexpr int kMeanB = 6;

int logstd_w_index() { return 7; }
int scorer_index(const EncoderConfig& cfg) {
  return cfg.mode == ContextMode::kProbabilistic ? 9 : 7;
}

Tensor uniform_fanin(std::vector<std::int64_t> shape, std::int64_t fan_in,
                     Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return Tensor::uniform(std::move(shape), rng, -bound, bound);
}

// Row-vector kernels matching the tape's matmul accumulation order exactly
// (k ascending, zero entries skipped), so the streaming path reproduces the
// batched taped path.
void matvec_row(const Tensor& w, const double* x, double* out) {
  const std::int64_t in = w.shape()[0];
  const std::int64_t width = w.shape()[1];
  std::fill(out, out + width, 0.0);
  for (std::int64_t k = 0; k < in; ++k) {
    const double xv = x[k];
    if (xv == 0.0) continue;
    const double* wrow = w.data() + k * width;
    for (std::int64_t j = 0; j < width; ++j) out[j] += xv * wrow[j];
  }
}

void linear_row(const Tensor& w, const Tensor& b, const double* x,
                double* out) {
  matvec_row(w, x, out);
  for (std::int64_t j = 0; j < w.shape()[1]; ++j) out[j] += b.at(0, j);
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Same arithmetic as Tape::clamp's relu composition.
double clamp_like_tape(double x, double lo, double hi) {
  const double r1 = std::max(0.0, x - lo);
  const double r2 = std::max(0.0, (hi - lo) - r1);
  return hi - r2;
}

void check_transition_widths(const EncoderConfig& cfg, const Transition& t) {
  if (static_cast<std::int64_t>(t.s.size()) != cfg.s_dim ||
      static_cast<std::int64_t>(t.a.size()) != cfg.a_dim)
    throw DimensionError(
        "encoder: transition widths (s=" + std::to_string(t.s.size()) +
        ", a=" + std::to_string(t.a.size()) + ") do not match config (s=" +
        std::to_string(cfg.s_dim) + ", a=" + std::to_string(cfg.a_dim) + ")");
}

}  // namespace

void ContextVariable::sample(Rng& rng) {
  if (!probabilistic())
    throw ContractError("ContextVariable::sample: deterministic context");
  value.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i)
    value[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
}

EncoderParams EncoderParams::init(const EncoderConfig& config, Rng& rng) {
  if (config.s_dim <= 0 || config.a_dim <= 0)
    throw ConfigError("encoder: s_dim and a_dim must be positive");
  if (config.context_dim < 1)
    throw ConfigError("encoder: context_dim must be >= 1");
  if (config.hidden < 1) throw ConfigError("encoder: hidden must be >= 1");

  EncoderParams enc;
  enc.config = config;
  const std::int64_t h = config.hidden;
  const std::int64_t d = config.context_dim;

  enc.params.add("in.W", uniform_fanin({config.input_dim(), h},
                                       config.input_dim(), rng));
  enc.params.add("in.b", uniform_fanin({1, h}, config.input_dim(), rng));
  LstmParams lstm = LstmParams::init({h, h}, rng);
  enc.params.add("lstm.Wx", lstm.params["Wx"]);
  enc.params.add("lstm.Wh", lstm.params["Wh"]);
  enc.params.add("lstm.b", lstm.params["b"]);
  enc.params.add("mean.W", uniform_fanin({h, d}, h, rng));
  enc.params.add("mean.b", uniform_fanin({1, d}, h, rng));
  if (config.mode == ContextMode::kProbabilistic) {
    enc.params.add("logstd.W", uniform_fanin({h, d}, h, rng));
    enc.params.add("logstd.b", uniform_fanin({1, d}, h, rng));
  }
  enc.params.add("scorer.W",
                 uniform_fanin({config.e_dim(), d}, config.e_dim(), rng));
  return enc;
}

BoundParams EncoderParams::lstm_bound(const BoundParams& full) {
  return {{full.leaf_ids[kLstmWx], full.leaf_ids[kLstmWh],
           full.leaf_ids[kLstmB]}};
}

// ---------------------------------------------------------------------------
// Streaming path (value-only)
// ---------------------------------------------------------------------------

EncoderStream::EncoderStream(const EncoderParams& params) : params_(&params) {
  reset();
}

void EncoderStream::reset() {
  const auto h = static_cast<std::size_t>(params_->config.hidden);
  h_.assign(h, 0.0);
  cell_.assign(h, 0.0);
  step_count_ = 0;
}

ContextVariable EncoderStream::initial_context() const {
  ContextVariable ctx;
  ctx.mean.assign(static_cast<std::size_t>(params_->config.context_dim), 0.0);
  ctx.value = ctx.mean;
  return ctx;
}

ContextVariable EncoderStream::step(std::span<const double> s,
                                    std::span<const double> a, double r) {
  const EncoderConfig& cfg = params_->config;
  if (static_cast<std::int64_t>(s.size()) != cfg.s_dim ||
      static_cast<std::int64_t>(a.size()) != cfg.a_dim)
    throw DimensionError("encode_step: triple widths do not match encoder");

  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(cfg.input_dim()));
  x.insert(x.end(), s.begin(), s.end());
  x.insert(x.end(), a.begin(), a.end());
  x.push_back(r);

  const ParamSet& ps = params_->params;
  const auto hidden = static_cast<std::size_t>(cfg.hidden);
  std::vector<double> lin(hidden);
  linear_row(ps.at(kInW), ps.at(kInB), x.data(), lin.data());
  for (double& v : lin) v = v > 0.0 ? v : 0.0;

  std::vector<double> x_part(4 * hidden);
  std::vector<double> h_part(4 * hidden);
  matvec_row(ps.at(kLstmWx), lin.data(), x_part.data());
  matvec_row(ps.at(kLstmWh), h_.data(), h_part.data());
  const Tensor& bias = ps.at(kLstmB);
  for (std::size_t j = 0; j < hidden; ++j) {
    const auto jj = static_cast<std::int64_t>(j);
    const double pre_i = (x_part[j] + h_part[j]) + bias.at(0, jj);
    const double pre_f =
        (x_part[hidden + j] + h_part[hidden + j]) + bias.at(0, jj + cfg.hidden);
    const double pre_g = (x_part[2 * hidden + j] + h_part[2 * hidden + j]) +
                         bias.at(0, jj + 2 * cfg.hidden);
    const double pre_o = (x_part[3 * hidden + j] + h_part[3 * hidden + j]) +
                         bias.at(0, jj + 3 * cfg.hidden);
    cell_[j] = (sigmoid(pre_f) * cell_[j]) + (sigmoid(pre_i) * std::tanh(pre_g));
    h_[j] = sigmoid(pre_o) * std::tanh(cell_[j]);
  }

  ContextVariable ctx;
  ctx.mean.resize(static_cast<std::size_t>(cfg.context_dim));
  linear_row(ps.at(kMeanW), ps.at(kMeanB), h_.data(), ctx.mean.data());
  if (cfg.mode == ContextMode::kProbabilistic) {
    ctx.log_std.resize(static_cast<std::size_t>(cfg.context_dim));
    linear_row(ps.at(logstd_w_index()), ps.at(logstd_w_index() + 1), h_.data(),
               ctx.log_std.data());
    for (double& v : ctx.log_std)
      v = clamp_like_tape(v, cfg.logstd_min, cfg.logstd_max);
  }
  ctx.value = ctx.mean;
  step_count_ += 1;
  return ctx;
}

std::vector<ContextVariable> encode_segment(
    const EncoderParams& params, const std::vector<Transition>& segment) {
  if (segment.empty())
    throw ContractError("encode_segment: segment must be nonempty");
  check_transition_widths(params.config, segment.front());
  EncoderStream stream(params);
  std::vector<ContextVariable> contexts;
  contexts.reserve(segment.size());
  for (const Transition& t : segment)
    contexts.push_back(stream.step(t.s, t.a, t.r));
  return contexts;
}

// ---------------------------------------------------------------------------
// Taped path (training)
// ---------------------------------------------------------------------------

namespace {

Value step_input_matrix(Tape& tape, const EncoderConfig& cfg,
                        const SegmentBatch& batch, std::int64_t t) {
  const auto n = static_cast<std::int64_t>(batch.segments.size());
  Tensor x = Tensor::zeros({n, cfg.input_dim()});
  for (std::int64_t i = 0; i < n; ++i) {
    const Transition& tr =
        batch.segments[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
    double* row = x.data() + i * cfg.input_dim();
    row = std::copy(tr.s.begin(), tr.s.end(), row);
    row = std::copy(tr.a.begin(), tr.a.end(), row);
    *row = tr.r;
  }
  return tape.constant(std::move(x));
}

Tensor positives_matrix(const EncoderConfig& cfg, const SegmentBatch& batch) {
  const auto n = static_cast<std::int64_t>(batch.segments.size());
  const std::int64_t l = batch.segment_len;
  Tensor e = Tensor::zeros({n, cfg.e_dim()});
  for (std::int64_t i = 0; i < n; ++i) {
    const Transition& tr = batch.segments[static_cast<std::size_t>(i)]
                                         [static_cast<std::size_t>(l - 1)];
    double* row = e.data() + i * cfg.e_dim();
    row = std::copy(tr.s.begin(), tr.s.end(), row);
    if (cfg.e_mode == TransitionEncoding::kSar) {
      row = std::copy(tr.a.begin(), tr.a.end(), row);
      *row = tr.r;
    }
  }
  return e;
}

struct Heads {
  Value mean;
  Value log_std;  // invalid in deterministic mode
};

Heads heads_at(Tape& tape, const EncoderParams& enc, const BoundParams& bound,
               Value h) {
  Heads heads;
  heads.mean = linear(tape, h, Value{bound.leaf_ids[kMeanW]},
                      Value{bound.leaf_ids[kMeanB]});
  if (enc.config.mode == ContextMode::kProbabilistic) {
    Value raw = linear(tape, h, Value{bound.leaf_ids[logstd_w_index()]},
                       Value{bound.leaf_ids[logstd_w_index() + 1]});
    heads.log_std =
        tape.clamp(raw, enc.config.logstd_min, enc.config.logstd_max);
  }
  return heads;
}

struct UnrollState {
  LstmState lstm;
};

UnrollState unroll_one(Tape& tape, const EncoderParams& enc,
                       const BoundParams& bound, Value x, UnrollState st) {
  Value lin = tape.relu(linear(tape, x, Value{bound.leaf_ids[kInW]},
                               Value{bound.leaf_ids[kInB]}));
  LstmParams shim;
  shim.config = enc.lstm_config();
  st.lstm = lstm_step(tape, shim, EncoderParams::lstm_bound(bound), lin,
                      st.lstm);
  return st;
}

struct EncoderGraph {
  Value loss_cp;
  Value contexts;  // c at step l-1 (sampled in probabilistic mode)
  Heads heads;
  Value kl;  // invalid in deterministic mode
  UnrollState state_lm1;
};

EncoderGraph build_encoder_graph(Tape& tape, const EncoderParams& enc,
                                 const BoundParams& bound,
                                 const SegmentBatch& batch,
                                 const Tensor* ctx_noise) {
  const auto n = static_cast<std::int64_t>(batch.segments.size());
  const std::int64_t l = batch.segment_len;
  if (n < 2)
    throw ContractError("infonce_loss: degenerate batch (need N >= 2, got " +
                        std::to_string(n) + ")");
  if (l < 2)
    throw ContractError(
        "infonce_loss: segments must have length >= 2 to score the next "
        "transition");
  check_transition_widths(enc.config, batch.segments[0][0]);
  if (enc.config.mode == ContextMode::kProbabilistic && ctx_noise == nullptr)
    throw ContractError("infonce_loss: probabilistic mode requires noise");

  EncoderGraph g;
  UnrollState st{lstm_zero_state(tape, enc.lstm_config(), n)};
  for (std::int64_t t = 0; t < l - 1; ++t)
    st = unroll_one(tape, enc, bound, step_input_matrix(tape, enc.config, batch, t),
                    st);
  g.state_lm1 = st;
  g.heads = heads_at(tape, enc, bound, st.lstm.h);

  if (enc.config.mode == ContextMode::kProbabilistic) {
    Value noise = tape.constant(*ctx_noise);
    g.contexts =
        tape.add(g.heads.mean, tape.mul(tape.exp(g.heads.log_std), noise));
    // Closed-form KL(N(mu, diag sigma^2) || N(0, I)), averaged over the batch.
    Value sigma_sq = tape.exp(tape.scale(g.heads.log_std, 2.0));
    Value mu_sq = tape.mul(g.heads.mean, g.heads.mean);
    Value terms = tape.sub(tape.add_const(tape.add(sigma_sq, mu_sq), -1.0),
                           tape.scale(g.heads.log_std, 2.0));
    g.kl = tape.scale(tape.mean(tape.row_sum(terms)), 0.5);
  } else {
    g.contexts = g.heads.mean;
  }

  // Bilinear scores: T[i][j] = e_j . W . c_i; positives on the diagonal.
  Value scorer{bound.leaf_ids[scorer_index(enc.config)]};
  Value ew = tape.matmul(tape.constant(positives_matrix(enc.config, batch)),
                         scorer);
  Value scores = tape.matmul(g.contexts, tape.transpose(ew));
  Value lse = tape.logsumexp(scores, 1);
  g.loss_cp = tape.mean(tape.sub(lse, tape.diag_col(scores)));
  return g;
}

/// Critic-loss term of the encoder objective. Contexts enter the Q networks
/// as tape values so the gradient reaches the encoder; critic and policy
/// parameters are constants here and never receive updates from this path.
Value critic_term_graph(Tape& tape, const EncoderParams& enc,
                        const BoundParams& bound, const SegmentBatch& batch,
                        const EncoderGraph& g, const CriticTermInputs& inputs,
                        Rng* rng) {
  if (inputs.sac == nullptr || inputs.critics == nullptr ||
      inputs.policy == nullptr)
    throw ContractError(
        "encoder_objective: beta1 > 0 requires critic, policy and config");

  const auto n = static_cast<std::int64_t>(batch.segments.size());
  const std::int64_t l = batch.segment_len;
  const EncoderConfig& cfg = enc.config;

  std::vector<double> targets;
  if (inputs.frozen_targets != nullptr) {
    if (static_cast<std::int64_t>(inputs.frozen_targets->size()) != n)
      throw DimensionError("encoder critic term: frozen target count " +
                           std::to_string(inputs.frozen_targets->size()) +
                           " does not match batch size " + std::to_string(n));
    targets = *inputs.frozen_targets;
  } else {
    // One more unroll step gives c' (the context after consuming the scored
    // transition).
    UnrollState st = unroll_one(tape, enc, bound,
                                step_input_matrix(tape, cfg, batch, l - 1),
                                g.state_lm1);
    Heads next_heads = heads_at(tape, enc, bound, st.lstm.h);
    Tensor c_next_vals = tape.value(next_heads.mean);
    if (cfg.mode == ContextMode::kProbabilistic) {
      const Tensor& ls = tape.value(next_heads.log_std);
      for (std::int64_t i = 0; i < c_next_vals.numel(); ++i)
        c_next_vals.at(i) += std::exp(ls.at(i)) * rng->normal();
    }

    // Bootstrap targets are plain numbers (gradient-blocked by construction).
    const Tensor& c_vals = tape.value(g.contexts);
    std::vector<RlTuple> rl(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      const Transition& tr = batch.segments[static_cast<std::size_t>(i)]
                                           [static_cast<std::size_t>(l - 1)];
      RlTuple& row = rl[static_cast<std::size_t>(i)];
      row.c.assign(c_vals.data() + i * cfg.context_dim,
                   c_vals.data() + (i + 1) * cfg.context_dim);
      row.s = tr.s;
      row.a = tr.a;
      row.r = tr.r;
      row.s_next = tr.s_next;
      row.c_next.assign(c_next_vals.data() + i * cfg.context_dim,
                        c_next_vals.data() + (i + 1) * cfg.context_dim);
      row.done = tr.done;
    }
    if (rng == nullptr)
      throw ContractError("encoder critic term: rng required for targets");
    Tensor noise = Tensor::zeros({n, cfg.a_dim});
    for (double& v : noise.values()) v = rng->normal();
    targets = q_target(*inputs.sac, *inputs.critics, *inputs.policy, rl, noise);
  }

  // Taped J_Q1 + J_Q2 with the context columns differentiable.
  Tensor sa = Tensor::zeros({n, cfg.s_dim + cfg.a_dim});
  for (std::int64_t i = 0; i < n; ++i) {
    const Transition& tr = batch.segments[static_cast<std::size_t>(i)]
                                         [static_cast<std::size_t>(l - 1)];
    double* p = sa.data() + i * (cfg.s_dim + cfg.a_dim);
    p = std::copy(tr.s.begin(), tr.s.end(), p);
    std::copy(tr.a.begin(), tr.a.end(), p);
  }
  Value q_in = tape.concat_cols(tape.constant(std::move(sa)), g.contexts);
  Value target =
      tape.constant(Tensor::matrix(n, 1, std::vector<double>(targets)));
  BoundParams q1_bound = bind_params_const(tape, inputs.critics->q1.params);
  BoundParams q2_bound = bind_params_const(tape, inputs.critics->q2.params);
  Value q1 = mlp_forward(tape, inputs.critics->q1, q1_bound, q_in);
  Value q2 = mlp_forward(tape, inputs.critics->q2, q2_bound, q_in);
  Value j1 = tape.scale(tape.mean(tape.squared_diff(q1, target)), 0.5);
  Value j2 = tape.scale(tape.mean(tape.squared_diff(q2, target)), 0.5);
  return tape.add(j1, j2);
}

Tensor draw_context_noise(const EncoderConfig& cfg, std::int64_t n, Rng& rng) {
  Tensor noise = Tensor::zeros({n, cfg.context_dim});
  for (double& v : noise.values()) v = rng.normal();
  return noise;
}

struct ObjectiveGraph {
  Value objective;
  EncoderGraph graph;
};

ObjectiveGraph build_objective(Tape& tape, const EncoderParams& enc,
                               const BoundParams& bound,
                               const SegmentBatch& batch, double beta1,
                               double beta2,
                               const CriticTermInputs* critic_term, Rng* rng) {
  if (beta1 < 0.0 || beta2 < 0.0)
    throw ContractError("encoder_objective: beta1 and beta2 must be >= 0");
  if (beta1 > 0.0 && critic_term == nullptr)
    throw ContractError(
        "encoder_objective: beta1 > 0 without a critic-loss term");
  const bool prob = enc.config.mode == ContextMode::kProbabilistic;
  const bool live_targets = beta1 > 0.0 && critic_term != nullptr &&
                            critic_term->frozen_targets == nullptr;
  if ((prob || live_targets) && rng == nullptr)
    throw ContractError("encoder_objective: rng required for this mode");

  std::optional<Tensor> noise;
  if (prob)
    noise = draw_context_noise(enc.config,
                               static_cast<std::int64_t>(batch.segments.size()),
                               *rng);
  ObjectiveGraph out{Value{}, build_encoder_graph(tape, enc, bound, batch,
                                                  noise ? &*noise : nullptr)};
  out.objective = out.graph.loss_cp;
  if (beta1 > 0.0) {
    Value jq = critic_term_graph(tape, enc, bound, batch, out.graph,
                                 *critic_term, rng);
    out.objective = tape.add(out.objective, tape.scale(jq, beta1));
  }
  if (prob && beta2 > 0.0)
    out.objective = tape.add(out.objective, tape.scale(out.graph.kl, beta2));
  return out;
}

}  // namespace

double infonce_loss_given(const Tensor& contexts, const Tensor& positives,
                          const Tensor& scorer) {
  Tape tape;
  Value ew = tape.matmul(tape.constant(positives), tape.constant(scorer));
  Value scores = tape.matmul(tape.constant(contexts), tape.transpose(ew));
  Value lse = tape.logsumexp(scores, 1);
  Value loss = tape.mean(tape.sub(lse, tape.diag_col(scores)));
  return tape.value(loss).at(0);
}

double infonce_loss(const EncoderParams& params, const SegmentBatch& batch,
                    Rng* rng) {
  Tape tape;
  BoundParams bound = bind_params(tape, params.params);
  std::optional<Tensor> noise;
  if (params.config.mode == ContextMode::kProbabilistic) {
    if (rng == nullptr)
      throw ContractError("infonce_loss: probabilistic mode requires rng");
    noise = draw_context_noise(params.config,
                               static_cast<std::int64_t>(batch.segments.size()),
                               *rng);
  }
  EncoderGraph g =
      build_encoder_graph(tape, params, bound, batch, noise ? &*noise : nullptr);
  return tape.value(g.loss_cp).at(0);
}

double mi_lower_bound(double loss, std::int64_t n) {
  if (n < 2) throw ContractError("mi_lower_bound: n must be >= 2");
  return std::log(static_cast<double>(n)) - loss;
}

double kl_regularizer(const std::vector<ContextVariable>& contexts) {
  if (contexts.empty())
    throw ContractError("kl_regularizer: empty context list");
  double total = 0.0;
  for (const ContextVariable& ctx : contexts) {
    if (!ctx.probabilistic())
      throw ContractError("kl_regularizer: deterministic context supplied");
    for (std::size_t i = 0; i < ctx.mean.size(); ++i) {
      const double sigma_sq = std::exp(2.0 * ctx.log_std[i]);
      total += 0.5 * (sigma_sq + ctx.mean[i] * ctx.mean[i] - 1.0 -
                      2.0 * ctx.log_std[i]);
    }
  }
  return total / static_cast<double>(contexts.size());
}

double encoder_objective(const EncoderParams& params, const SegmentBatch& batch,
                         double beta1, double beta2,
                         const CriticTermInputs* critic_term, Rng* rng) {
  Tape tape;
  BoundParams bound = bind_params(tape, params.params);
  ObjectiveGraph g =
      build_objective(tape, params, bound, batch, beta1, beta2, critic_term, rng);
  return tape.value(g.objective).at(0);
}

std::pair<double, std::vector<Tensor>> encoder_objective_with_grads(
    const EncoderParams& params, const SegmentBatch& batch, double beta1,
    double beta2, const CriticTermInputs* critic_term, Rng* rng) {
  Tape tape;
  BoundParams bound = bind_params(tape, params.params);
  ObjectiveGraph g =
      build_objective(tape, params, bound, batch, beta1, beta2, critic_term, rng);
  Gradients grads = tape.backward(g.objective);
  std::vector<Tensor> gs;
  gs.reserve(bound.leaf_ids.size());
  for (int id : bound.leaf_ids) gs.push_back(grads.get(Value{id}));
  return {tape.value(g.objective).at(0), std::move(gs)};
}

EncoderUpdateMetrics encoder_update(EncoderParams& params, AdamState& state,
                                    const SegmentBatch& batch, double lr,
                                    double beta1, double beta2,
                                    const CriticTermInputs* critic_term,
                                    Rng* rng) {
  Tape tape;
  BoundParams bound = bind_params(tape, params.params);
  ObjectiveGraph g =
      build_objective(tape, params, bound, batch, beta1, beta2, critic_term, rng);

  const Tensor& obj = tape.value(g.objective);
  obj.require_finite("encoder objective");
  Gradients grads = tape.backward(g.objective);
  std::vector<Tensor> gs;
  gs.reserve(bound.leaf_ids.size());
  for (int id : bound.leaf_ids) gs.push_back(grads.get(Value{id}));
  sgd_adam_step(params.params, gs, state, lr);

  EncoderUpdateMetrics metrics;
  metrics.loss_cp = tape.value(g.graph.loss_cp).at(0);
  metrics.kl = g.graph.kl.valid() ? tape.value(g.graph.kl).at(0) : 0.0;
  metrics.mi_bound = mi_lower_bound(
      metrics.loss_cp, static_cast<std::int64_t>(batch.segments.size()));
  metrics.objective = obj.at(0);
  return metrics;
}

}  // namespace lcsac
