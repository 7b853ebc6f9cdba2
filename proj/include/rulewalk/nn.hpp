#pragma once
// Walker policy network with hand-written reverse-mode gradients.
//
// Architecture (MINERVA lineage): entity and relation embedding tables, a
// stacked LSTM over the action history, and a two-layer feed-forward
// scorer. At every step the scorer maps
//     [h_top ; emb(current entity) ; emb(query relation)]
// through tanh(W1 x + b1) and W2 h + b2 to a 2d "action query" vector;
// each candidate action (r, e') scores as the dot product with
// [emb(r) ; emb(e')]. Masked actions are excluded from the softmax and
// carry probability exactly 0.
//
// Everything is templated on the scalar: float for training, double for
// the finite-difference gradient checks. Two reserved relation-embedding
// rows back the NO_OP action and the episode-start marker.
//
// The REINFORCE objective for a batch of episodes with advantages A_e:
//     loss = -sum_e A_e * sum_t log pi(a_t)  -  beta * sum_e sum_t H(pi_t)
// Gradients are accumulated per episode and are associative, so callers
// may reduce them in any grouping.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rulewalk/core.hpp"

namespace rulewalk {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct PolicyConfig {
  int embedding_size = 256;
  int hidden_size = 256;
  int lstm_layers = 2;
  int max_branching = 150;
  std::uint64_t seed = 1;

  void validate() const {
    if (embedding_size <= 0 || hidden_size <= 0 || lstm_layers <= 0 || max_branching <= 0)
      throw ConfigError("policy config: sizes must be positive");
  }
};

struct Action {
  RelId rel = kNoOpRelation;
  NodeId dst = -1;
  friend bool operator==(const Action& a, const Action& b) {
    return a.rel == b.rel && a.dst == b.dst;
  }
};

// One step of an episode as needed to recompute its loss: the candidate
// actions shown to the agent, the mask, and the sampled choice.
struct StepChoice {
  std::vector<Action> actions;
  std::vector<std::uint8_t> masked;
  int chosen = -1;
};

struct EpisodeTape {
  NodeId source = -1;
  RelId query_rel = -1;
  std::vector<StepChoice> steps;
};

template <class S>
struct PolicyTensors {
  MatX<S> entity_emb;               // num_entities x d
  MatX<S> relation_emb;             // (num_relations + 2) x d
  std::vector<MatX<S>> lstm_w;      // per layer: 4H x (in + H)
  std::vector<MatX<S>> lstm_b;      // per layer: 4H x 1
  MatX<S> w1, b1;                   // H x (H + 2d), H x 1
  MatX<S> w2, b2;                   // 2d x H, 2d x 1

  template <class F>
  void for_each(F&& f) {
    f("entity_emb", entity_emb);
    f("relation_emb", relation_emb);
    for (std::size_t l = 0; l < lstm_w.size(); ++l) {
      f("lstm_w" + std::to_string(l), lstm_w[l]);
      f("lstm_b" + std::to_string(l), lstm_b[l]);
    }
    f("w1", w1);
    f("b1", b1);
    f("w2", w2);
    f("b2", b2);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<PolicyTensors*>(this)->for_each(
        [&](const std::string& n, MatX<S>& m) { f(n, static_cast<const MatX<S>&>(m)); });
  }

  void zero_like(const PolicyTensors& shape) {
    entity_emb = MatX<S>::Zero(shape.entity_emb.rows(), shape.entity_emb.cols());
    relation_emb = MatX<S>::Zero(shape.relation_emb.rows(), shape.relation_emb.cols());
    lstm_w.clear();
    lstm_b.clear();
    for (std::size_t l = 0; l < shape.lstm_w.size(); ++l) {
      lstm_w.push_back(MatX<S>::Zero(shape.lstm_w[l].rows(), shape.lstm_w[l].cols()));
      lstm_b.push_back(MatX<S>::Zero(shape.lstm_b[l].rows(), shape.lstm_b[l].cols()));
    }
    w1 = MatX<S>::Zero(shape.w1.rows(), shape.w1.cols());
    b1 = MatX<S>::Zero(shape.b1.rows(), shape.b1.cols());
    w2 = MatX<S>::Zero(shape.w2.rows(), shape.w2.cols());
    b2 = MatX<S>::Zero(shape.b2.rows(), shape.b2.cols());
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const MatX<S>& m) {
      if (!m.allFinite()) ok = false;
    });
    return ok;
  }
};

template <class S>
struct PolicyParams : PolicyTensors<S> {
  PolicyConfig config;
  int num_entities = 0;
  int num_relations = 0;  // schema relations; +2 reserved rows in relation_emb

  int noop_row() const { return num_relations; }
  int start_row() const { return num_relations + 1; }
  int rel_row(RelId r) const { return r == kNoOpRelation ? noop_row() : static_cast<int>(r); }

  static PolicyParams init(const PolicyConfig& cfg, int num_entities, int num_relations) {
    cfg.validate();
    PolicyParams p;
    p.config = cfg;
    p.num_entities = num_entities;
    p.num_relations = num_relations;
    const int d = cfg.embedding_size;
    const int h = cfg.hidden_size;

    RngStream rng = RngStream::derive(cfg.seed, 0x504f4c49ULL /*"POLI"*/);
    auto uniform_mat = [&](Eigen::Index rows, Eigen::Index cols, double fan_in) {
      MatX<S> m(rows, cols);
      const double limit = 1.0 / std::sqrt(fan_in);
      for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r)
          m(r, c) = static_cast<S>((rng.next_double() * 2.0 - 1.0) * limit);
      return m;
    };

    p.entity_emb = uniform_mat(num_entities, d, d);
    p.relation_emb = uniform_mat(num_relations + 2, d, d);
    for (int l = 0; l < cfg.lstm_layers; ++l) {
      const int in = l == 0 ? 2 * d : h;
      p.lstm_w.push_back(uniform_mat(4 * h, in + h, in + h));
      p.lstm_b.push_back(uniform_mat(4 * h, 1, in + h));
    }
    p.w1 = uniform_mat(h, h + 2 * d, h + 2 * d);
    p.b1 = uniform_mat(h, 1, h + 2 * d);
    p.w2 = uniform_mat(2 * d, h, h);
    p.b2 = uniform_mat(2 * d, 1, h);
    return p;
  }
};

template <class S>
struct AgentState {
  NodeId source = -1;
  RelId query_rel = -1;
  NodeId current = -1;
  int step = 0;
  int max_steps = 0;
  std::vector<VecX<S>> h, c;  // per layer
};

template <class S>
struct ActionDistribution {
  std::vector<Action> actions;
  std::vector<S> probs;      // masked entries are exactly 0
  std::vector<S> log_probs;  // meaningful for unmasked entries only
};

namespace detail {

template <class S>
struct LstmLayerCache {
  VecX<S> x, h_prev, c_prev, i, f, g, o, c, tanh_c;
};

template <class S>
struct ScoreCache {
  VecX<S> obs, pre1, hidden, out;
  std::vector<S> probs;
  S entropy = S(0);
};

template <class S>
inline S sigmoid(S v) {
  return S(1) / (S(1) + std::exp(-v));
}

// One stacked-LSTM update; h/c are modified in place. Returns per-layer
// caches when `cache` is non-null.
template <class S>
inline void lstm_forward(const PolicyParams<S>& p, const VecX<S>& input,
                         std::vector<VecX<S>>& h, std::vector<VecX<S>>& c,
                         std::vector<LstmLayerCache<S>>* cache) {
  const int hs = p.config.hidden_size;
  VecX<S> x = input;
  for (int l = 0; l < p.config.lstm_layers; ++l) {
    LstmLayerCache<S> lc;
    lc.x = x;
    lc.h_prev = h[l];
    lc.c_prev = c[l];
    VecX<S> concat(x.size() + hs);
    concat << x, h[l];
    VecX<S> z = p.lstm_w[l] * concat + p.lstm_b[l].col(0);
    lc.i = z.segment(0, hs).unaryExpr([](S v) { return sigmoid(v); });
    lc.f = z.segment(hs, hs).unaryExpr([](S v) { return sigmoid(v); });
    lc.g = z.segment(2 * hs, hs).array().tanh();
    lc.o = z.segment(3 * hs, hs).unaryExpr([](S v) { return sigmoid(v); });
    lc.c = lc.f.cwiseProduct(lc.c_prev) + lc.i.cwiseProduct(lc.g);
    lc.tanh_c = lc.c.array().tanh();
    h[l] = lc.o.cwiseProduct(lc.tanh_c);
    c[l] = lc.c;
    x = h[l];
    if (cache) cache->push_back(std::move(lc));
  }
}

template <class S>
inline VecX<S> action_input(const PolicyParams<S>& p, RelId rel, NodeId ent) {
  const int d = p.config.embedding_size;
  VecX<S> x(2 * d);
  x << p.relation_emb.row(p.rel_row(rel)).transpose(), p.entity_emb.row(ent).transpose();
  return x;
}

// Scores candidates against the current state. Fills dist (probabilities,
// log-probabilities) and optionally the cache used by backprop.
template <class S>
inline void score_forward(const PolicyParams<S>& p, const AgentState<S>& state,
                          const std::vector<Action>& actions,
                          const std::vector<std::uint8_t>& masked,
                          ActionDistribution<S>& dist, ScoreCache<S>* cache) {
  const int d = p.config.embedding_size;
  const int hs = p.config.hidden_size;
  const int top = p.config.lstm_layers - 1;

  VecX<S> obs(hs + 2 * d);
  obs << state.h[top], p.entity_emb.row(state.current).transpose(),
      p.relation_emb.row(p.rel_row(state.query_rel)).transpose();
  VecX<S> pre1 = p.w1 * obs + p.b1.col(0);
  VecX<S> hidden = pre1.array().tanh();  // smooth, so finite differences stay clean
  VecX<S> out = p.w2 * hidden + p.b2.col(0);

  const std::size_t n = actions.size();
  std::vector<S> scores(n, S(0));
  S best = std::numeric_limits<S>::lowest();
  std::size_t unmasked = 0;
  for (std::size_t a = 0; a < n; ++a) {
    if (masked[a]) continue;
    VecX<S> key = action_input(p, actions[a].rel, actions[a].dst);
    scores[a] = out.dot(key);
    best = std::max(best, scores[a]);
    ++unmasked;
  }
  assert(unmasked > 0 && "score_actions requires an unmasked action");

  S z = S(0);
  std::vector<S> expv(n, S(0));
  for (std::size_t a = 0; a < n; ++a) {
    if (masked[a]) continue;
    expv[a] = std::exp(scores[a] - best);
    z += expv[a];
  }
  dist.actions = actions;
  dist.probs.assign(n, S(0));
  dist.log_probs.assign(n, S(0));
  const S logz = std::log(z);
  for (std::size_t a = 0; a < n; ++a) {
    if (masked[a]) continue;
    dist.probs[a] = expv[a] / z;
    dist.log_probs[a] = scores[a] - best - logz;
  }
  if (cache) {
    cache->obs = std::move(obs);
    cache->pre1 = std::move(pre1);
    cache->hidden = std::move(hidden);
    cache->out = std::move(out);
    cache->probs = dist.probs;
    S ent = S(0);
    for (std::size_t a = 0; a < n; ++a)
      if (!masked[a] && dist.probs[a] > S(0))
        ent -= dist.probs[a] * std::log(dist.probs[a]);
    cache->entropy = ent;
  }
}

}  // namespace detail

// Fresh state whose history was primed with one LSTM step over the
// (start-marker, source entity) pair.
template <class S>
inline AgentState<S> start_state(const PolicyParams<S>& p, NodeId source, RelId query_rel,
                                 int max_steps) {
  AgentState<S> s;
  s.source = source;
  s.query_rel = query_rel;
  s.current = source;
  s.step = 0;
  s.max_steps = max_steps;
  s.h.assign(p.config.lstm_layers, VecX<S>::Zero(p.config.hidden_size));
  s.c.assign(p.config.lstm_layers, VecX<S>::Zero(p.config.hidden_size));
  VecX<S> x(2 * p.config.embedding_size);
  x << p.relation_emb.row(p.start_row()).transpose(), p.entity_emb.row(source).transpose();
  detail::lstm_forward<S>(p, x, s.h, s.c, nullptr);
  return s;
}

template <class S>
inline ActionDistribution<S> score_actions(const PolicyParams<S>& p, const AgentState<S>& state,
                                           const std::vector<Action>& actions,
                                           const std::vector<std::uint8_t>& masked) {
  ActionDistribution<S> dist;
  detail::score_forward<S>(p, state, actions, masked, dist, nullptr);
  return dist;
}

// Advances the history LSTM with the taken action and moves the agent.
template <class S>
inline AgentState<S> step_history(const PolicyParams<S>& p, const AgentState<S>& state,
                                  const Action& taken) {
  if (state.step >= state.max_steps)
    throw std::runtime_error("step_history: episode already used all " +
                             std::to_string(state.max_steps) + " transitions");
  AgentState<S> next = state;
  VecX<S> x = detail::action_input(p, taken.rel, taken.dst);
  detail::lstm_forward<S>(p, x, next.h, next.c, nullptr);
  next.current = taken.dst;
  next.step = state.step + 1;
  return next;
}

// Recomputes one episode's loss contribution from its tape:
//   -advantage * sum_t log pi(a_t) - beta * sum_t H(pi_t)
template <class S>
inline S episode_loss(const PolicyParams<S>& p, const EpisodeTape& tape, S advantage, S beta) {
  const int steps = static_cast<int>(tape.steps.size());
  AgentState<S> state = start_state(p, tape.source, tape.query_rel, steps);
  S loss = S(0);
  for (int t = 0; t < steps; ++t) {
    const StepChoice& sc = tape.steps[t];
    ActionDistribution<S> dist;
    detail::ScoreCache<S> cache;
    detail::score_forward(p, state, sc.actions, sc.masked, dist, &cache);
    loss -= advantage * dist.log_probs[sc.chosen];
    if (beta != S(0)) loss -= beta * cache.entropy;
    if (t + 1 < steps) state = step_history(p, state, sc.actions[sc.chosen]);
  }
  return loss;
}

// Backprop of episode_loss into `grads` (accumulating). Returns the loss.
template <class S>
inline S accumulate_episode_gradients(const PolicyParams<S>& p, const EpisodeTape& tape,
                                      S advantage, S beta, PolicyTensors<S>& grads) {
  const int steps = static_cast<int>(tape.steps.size());
  if (steps == 0) return S(0);
  const int layers = p.config.lstm_layers;
  const int hs = p.config.hidden_size;
  const int d = p.config.embedding_size;

  // forward pass with caches; lstm step k produces the hidden state used
  // by the scoring at step k (k = 0 is the start-marker step)
  std::vector<std::vector<detail::LstmLayerCache<S>>> lstm_cache;
  std::vector<detail::ScoreCache<S>> score_cache(steps);
  std::vector<RelId> consumed_rel(steps, kNoOpRelation);
  std::vector<NodeId> consumed_ent(steps, -1);
  std::vector<NodeId> at_entity(steps, -1);

  std::vector<VecX<S>> h(layers, VecX<S>::Zero(hs)), c(layers, VecX<S>::Zero(hs));
  S loss = S(0);
  {
    std::vector<detail::LstmLayerCache<S>> cache0;
    VecX<S> x0(2 * d);
    x0 << p.relation_emb.row(p.start_row()).transpose(),
        p.entity_emb.row(tape.source).transpose();
    detail::lstm_forward(p, x0, h, c, &cache0);
    lstm_cache.push_back(std::move(cache0));
    consumed_rel[0] = kNoOpRelation;  // sentinel; start row handled below
    consumed_ent[0] = tape.source;
  }
  NodeId current = tape.source;
  AgentState<S> state;
  state.source = tape.source;
  state.query_rel = tape.query_rel;
  state.max_steps = steps;
  for (int t = 0; t < steps; ++t) {
    const StepChoice& sc = tape.steps[t];
    state.current = current;
    state.step = t;
    state.h = h;
    state.c = c;
    at_entity[t] = current;
    ActionDistribution<S> dist;
    detail::score_forward(p, state, sc.actions, sc.masked, dist, &score_cache[t]);
    loss -= advantage * dist.log_probs[sc.chosen];
    if (beta != S(0)) loss -= beta * score_cache[t].entropy;
    const Action& act = sc.actions[sc.chosen];
    if (t + 1 < steps) {
      std::vector<detail::LstmLayerCache<S>> cache;
      detail::lstm_forward(p, detail::action_input(p, act.rel, act.dst), h, c, &cache);
      lstm_cache.push_back(std::move(cache));
      consumed_rel[t + 1] = act.rel;
      consumed_ent[t + 1] = act.dst;
      current = act.dst;
    }
  }

  // backward
  std::vector<VecX<S>> dh(layers, VecX<S>::Zero(hs)), dc(layers, VecX<S>::Zero(hs));
  const int top = layers - 1;
  const int query_row = p.rel_row(tape.query_rel);

  for (int k = static_cast<int>(lstm_cache.size()) - 1; k >= 0; --k) {
    // scoring at step k used lstm output k
    {
      const StepChoice& sc = tape.steps[k];
      const detail::ScoreCache<S>& cache = score_cache[k];
      const std::size_t n = sc.actions.size();

      std::vector<S> dscore(n, S(0));
      for (std::size_t a = 0; a < n; ++a) {
        if (sc.masked[a]) continue;
        const S pa = cache.probs[a];
        S g = -advantage * ((a == static_cast<std::size_t>(sc.chosen) ? S(1) : S(0)) - pa);
        if (beta != S(0) && pa > S(0))
          g += beta * pa * (std::log(pa) + cache.entropy);
        dscore[a] = g;
      }

      VecX<S> dout = VecX<S>::Zero(2 * d);
      for (std::size_t a = 0; a < n; ++a) {
        if (sc.masked[a] || dscore[a] == S(0)) continue;
        VecX<S> key = detail::action_input(p, sc.actions[a].rel, sc.actions[a].dst);
        dout += dscore[a] * key;
        grads.relation_emb.row(p.rel_row(sc.actions[a].rel)) +=
            (dscore[a] * cache.out.segment(0, d)).transpose();
        grads.entity_emb.row(sc.actions[a].dst) +=
            (dscore[a] * cache.out.segment(d, d)).transpose();
      }

      grads.w2 += dout * cache.hidden.transpose();
      grads.b2.col(0) += dout;
      VecX<S> dhidden = p.w2.transpose() * dout;
      VecX<S> dpre1 =
          dhidden.cwiseProduct((S(1) - cache.hidden.array().square()).matrix());
      grads.w1 += dpre1 * cache.obs.transpose();
      grads.b1.col(0) += dpre1;
      VecX<S> dobs = p.w1.transpose() * dpre1;

      dh[top] += dobs.segment(0, hs);
      grads.entity_emb.row(at_entity[k]) += dobs.segment(hs, d).transpose();
      grads.relation_emb.row(query_row) += dobs.segment(hs + d, d).transpose();
    }

    // lstm step k backward, top layer down
    for (int l = top; l >= 0; --l) {
      const detail::LstmLayerCache<S>& lc = lstm_cache[k][l];
      VecX<S> do_ = dh[l].cwiseProduct(lc.tanh_c);
      VecX<S> dct = dc[l] + dh[l].cwiseProduct(lc.o).cwiseProduct(
                                (S(1) - lc.tanh_c.array().square()).matrix());
      VecX<S> di = dct.cwiseProduct(lc.g);
      VecX<S> df = dct.cwiseProduct(lc.c_prev);
      VecX<S> dg = dct.cwiseProduct(lc.i);
      VecX<S> dc_prev = dct.cwiseProduct(lc.f);

      VecX<S> dz(4 * hs);
      dz.segment(0, hs) = di.cwiseProduct(lc.i).cwiseProduct((S(1) - lc.i.array()).matrix());
      dz.segment(hs, hs) = df.cwiseProduct(lc.f).cwiseProduct((S(1) - lc.f.array()).matrix());
      dz.segment(2 * hs, hs) = dg.cwiseProduct((S(1) - lc.g.array().square()).matrix());
      dz.segment(3 * hs, hs) = do_.cwiseProduct(lc.o).cwiseProduct((S(1) - lc.o.array()).matrix());

      VecX<S> concat(lc.x.size() + hs);
      concat << lc.x, lc.h_prev;
      grads.lstm_w[l] += dz * concat.transpose();
      grads.lstm_b[l].col(0) += dz;
      VecX<S> dconcat = p.lstm_w[l].transpose() * dz;

      VecX<S> dx = dconcat.segment(0, lc.x.size());
      dh[l] = dconcat.segment(lc.x.size(), hs);
      dc[l] = dc_prev;
      if (l > 0) {
        dh[l - 1] += dx;
      } else {
        const int rel_row = k == 0 ? p.start_row() : p.rel_row(consumed_rel[k]);
        grads.relation_emb.row(rel_row) += dx.segment(0, d).transpose();
        grads.entity_emb.row(consumed_ent[k]) += dx.segment(d, d).transpose();
      }
    }
  }
  return loss;
}

struct EpisodeGrad {
  const EpisodeTape* tape;
  double advantage;
};

// Summed gradients over a batch of episodes. Throws on non-finite output,
// which signals a numeric fault in the batch.
template <class S>
inline S policy_gradients(const PolicyParams<S>& p, const std::vector<EpisodeGrad>& episodes,
                          S beta, PolicyTensors<S>& grads) {
  grads.zero_like(p);
  S loss = S(0);
  for (const auto& e : episodes)
    loss += accumulate_episode_gradients(p, *e.tape, static_cast<S>(e.advantage), beta, grads);
  if (!grads.all_finite() || !std::isfinite(static_cast<double>(loss)))
    throw std::runtime_error("policy_gradients: non-finite gradient or loss");
  return loss;
}

// Max relative error between analytic and central-difference gradients.
// Meant for tiny double-precision policies.
template <class S>
inline double finite_diff_check(PolicyParams<S>& p, const EpisodeTape& tape, S advantage,
                                S beta, double eps = 1e-4) {
  PolicyTensors<S> analytic;
  analytic.zero_like(p);
  accumulate_episode_gradients(p, tape, advantage, beta, analytic);

  double max_rel = 0.0;
  p.for_each([&](const std::string& name, MatX<S>& m) {
    MatX<S>* ga = nullptr;
    analytic.for_each([&](const std::string& n2, MatX<S>& g) {
      if (n2 == name) ga = &g;
    });
    for (Eigen::Index cidx = 0; cidx < m.cols(); ++cidx) {
      for (Eigen::Index ridx = 0; ridx < m.rows(); ++ridx) {
        const S saved = m(ridx, cidx);
        m(ridx, cidx) = saved + static_cast<S>(eps);
        const S lp = episode_loss(p, tape, advantage, beta);
        m(ridx, cidx) = saved - static_cast<S>(eps);
        const S lm = episode_loss(p, tape, advantage, beta);
        m(ridx, cidx) = saved;
        // difference quotient stays in S so a wider scalar keeps its headroom
        const S numeric = (lp - lm) / (S(2) * static_cast<S>(eps));
        const double rel =
            static_cast<double>(std::abs((*ga)(ridx, cidx) - numeric)) /
            (static_cast<double>(std::abs(numeric)) + 1e-8);
        max_rel = std::max(max_rel, rel);
      }
    }
  });
  return max_rel;
}

// Scales all gradients so their joint L2 norm is at most `max_norm`.
template <class S>
inline void clip_global_norm(PolicyTensors<S>& grads, double max_norm) {
  double sq = 0.0;
  grads.for_each([&](const std::string&, const MatX<S>& m) {
    sq += static_cast<double>(m.template cast<double>().squaredNorm());
  });
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const S scale = static_cast<S>(max_norm / norm);
    grads.for_each([&](const std::string&, MatX<S>& m) { m *= scale; });
  }
}

template <class S>
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const PolicyParams<S>& shape) {
    m_.zero_like(shape);
    v_.zero_like(shape);
  }

  void step(PolicyParams<S>& params, const PolicyTensors<S>& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    auto update = [&](MatX<S>& theta, MatX<S>& m, MatX<S>& v, const MatX<S>& g) {
      m = static_cast<S>(beta1_) * m + static_cast<S>(1.0 - beta1_) * g;
      v = static_cast<S>(beta2_) * v + static_cast<S>(1.0 - beta2_) * g.cwiseProduct(g);
      MatX<S> mhat = m / static_cast<S>(bc1);
      MatX<S> vhat = v / static_cast<S>(bc2);
      theta -= (static_cast<S>(lr) * mhat.array() / (vhat.array().sqrt() + static_cast<S>(eps_)))
                   .matrix();
    };
    update(params.entity_emb, m_.entity_emb, v_.entity_emb, grads.entity_emb);
    update(params.relation_emb, m_.relation_emb, v_.relation_emb, grads.relation_emb);
    for (std::size_t l = 0; l < params.lstm_w.size(); ++l) {
      update(params.lstm_w[l], m_.lstm_w[l], v_.lstm_w[l], grads.lstm_w[l]);
      update(params.lstm_b[l], m_.lstm_b[l], v_.lstm_b[l], grads.lstm_b[l]);
    }
    update(params.w1, m_.w1, v_.w1, grads.w1);
    update(params.b1, m_.b1, v_.b1, grads.b1);
    update(params.w2, m_.w2, v_.w2, grads.w2);
    update(params.b2, m_.b2, v_.b2, grads.b2);
  }

 private:
  PolicyTensors<S> m_, v_;
  long t_ = 0;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
};

// --- checkpointing -------------------------------------------------------
// Binary, bit-exact round-trip: config header, named tensors, then the
// rule-weight table at full double precision.

namespace detail {
inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string read_string(std::istream& in) {
  std::string s(read_u32(in), '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}
}  // namespace detail

template <class S>
inline void save_checkpoint(const std::string& path, const PolicyParams<S>& params,
                            const std::vector<double>& rule_weights) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  out.write("RWCKPT01", 8);
  detail::write_u32(out, static_cast<std::uint32_t>(sizeof(S)));
  detail::write_u32(out, static_cast<std::uint32_t>(params.num_entities));
  detail::write_u32(out, static_cast<std::uint32_t>(params.num_relations));
  detail::write_u32(out, static_cast<std::uint32_t>(params.config.embedding_size));
  detail::write_u32(out, static_cast<std::uint32_t>(params.config.hidden_size));
  detail::write_u32(out, static_cast<std::uint32_t>(params.config.lstm_layers));
  detail::write_u32(out, static_cast<std::uint32_t>(params.config.max_branching));
  out.write(reinterpret_cast<const char*>(&params.config.seed), sizeof(params.config.seed));

  std::uint32_t count = 0;
  params.for_each([&](const std::string&, const MatX<S>&) { ++count; });
  detail::write_u32(out, count);
  params.for_each([&](const std::string& name, const MatX<S>& m) {
    detail::write_string(out, name);
    detail::write_u32(out, static_cast<std::uint32_t>(m.rows()));
    detail::write_u32(out, static_cast<std::uint32_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(S) * m.size()));
  });
  detail::write_u32(out, static_cast<std::uint32_t>(rule_weights.size()));
  out.write(reinterpret_cast<const char*>(rule_weights.data()),
            static_cast<std::streamsize>(sizeof(double) * rule_weights.size()));
}

template <class S>
inline void load_checkpoint(const std::string& path, PolicyParams<S>& params,
                            std::vector<double>& rule_weights) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint not found: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != "RWCKPT01")
    throw ConfigError("not a checkpoint file: " + path);
  if (detail::read_u32(in) != sizeof(S))
    throw ConfigError("checkpoint scalar width mismatch: " + path);
  params.num_entities = static_cast<int>(detail::read_u32(in));
  params.num_relations = static_cast<int>(detail::read_u32(in));
  params.config.embedding_size = static_cast<int>(detail::read_u32(in));
  params.config.hidden_size = static_cast<int>(detail::read_u32(in));
  params.config.lstm_layers = static_cast<int>(detail::read_u32(in));
  params.config.max_branching = static_cast<int>(detail::read_u32(in));
  in.read(reinterpret_cast<char*>(&params.config.seed), sizeof(params.config.seed));

  params.lstm_w.assign(params.config.lstm_layers, {});
  params.lstm_b.assign(params.config.lstm_layers, {});
  const std::uint32_t count = detail::read_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = detail::read_string(in);
    const std::uint32_t rows = detail::read_u32(in);
    const std::uint32_t cols = detail::read_u32(in);
    MatX<S> m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(S) * m.size()));
    bool placed = false;
    params.for_each([&](const std::string& n2, MatX<S>& slot) {
      if (n2 == name) {
        slot = m;
        placed = true;
      }
    });
    if (!placed) throw ConfigError("checkpoint has unknown tensor '" + name + "'");
  }
  rule_weights.assign(detail::read_u32(in), 0.0);
  in.read(reinterpret_cast<char*>(rule_weights.data()),
          static_cast<std::streamsize>(sizeof(double) * rule_weights.size()));
  if (!in) throw ConfigError("truncated checkpoint: " + path);
}

}  // namespace rulewalk
