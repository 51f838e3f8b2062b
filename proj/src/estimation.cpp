#include "ctxmdp/estimation.hpp"

#include <cmath>
#include <stdexcept>

namespace ctxmdp {

Eigen::VectorXd PairLog::transition_responses(int next_state) const {
  Eigen::VectorXd y(visits());
  for (int u = 0; u < visits(); ++u) y[u] = next_states[u] == next_state ? 1.0 : 0.0;
  return y;
}

SufficientStats::SufficientStats(TopologyPtr topology, FeatureMaps maps, long refresh_period)
    : topology_(std::move(topology)), maps_(std::move(maps)) {
  logs_.resize(topology_->num_pairs());
  reward_matrices_.assign(topology_->num_pairs(),
                          DesignMatrix(maps_.reward.output_dim(), refresh_period));
  transition_matrices_.assign(topology_->num_triples(),
                              DesignMatrix(maps_.transition.output_dim(), refresh_period));
}

SufficientStats::SufficientStats(TopologyPtr topology, FeatureMaps maps,
                                 std::vector<PairLog> logs,
                                 std::vector<DesignMatrix> reward_matrices,
                                 std::vector<DesignMatrix> transition_matrices,
                                 int episodes_recorded)
    : topology_(std::move(topology)),
      maps_(std::move(maps)),
      logs_(std::move(logs)),
      reward_matrices_(std::move(reward_matrices)),
      transition_matrices_(std::move(transition_matrices)),
      episodes_recorded_(episodes_recorded) {
  if (static_cast<int>(logs_.size()) != topology_->num_pairs() ||
      static_cast<int>(reward_matrices_.size()) != topology_->num_pairs() ||
      static_cast<int>(transition_matrices_.size()) != topology_->num_triples()) {
    throw std::invalid_argument("stats checkpoint does not match the topology");
  }
}

void SufficientStats::record_episode(const Trajectory& trajectory) {
  const auto& topo = *topology_;
  const int L = topo.horizon();
  if (static_cast<int>(trajectory.states.size()) != L + 1 ||
      static_cast<int>(trajectory.actions.size()) != L ||
      static_cast<int>(trajectory.rewards.size()) != L) {
    throw TopologyError("trajectory length does not match the topology horizon");
  }
  if (trajectory.side_info.size() != maps_.side_info_dim()) {
    throw std::invalid_argument("trajectory side information has the wrong dimension");
  }
  const Eigen::VectorXd psi = maps_.reward(trajectory.side_info);
  const Eigen::VectorXd phi = maps_.transition(trajectory.side_info);

  for (int l = 0; l < L; ++l) {
    const int s = trajectory.states[l];
    const int a = trajectory.actions[l];
    const int next = trajectory.states[l + 1];
    if (s < 0 || s >= topo.layer_size(l) || a < 0 || a >= topo.num_actions()) {
      throw TopologyError("trajectory visits a state-action outside the topology");
    }
    const int pair = topo.pair_index(l, s, a);
    if (!topo.triple_index(pair, next)) {
      throw TopologyError("trajectory follows a transition the topology does not allow");
    }

    PairLog& log = logs_[pair];
    log.episodes.push_back(trajectory.episode);
    log.side_info.insert(log.side_info.end(), trajectory.side_info.begin(),
                         trajectory.side_info.end());
    log.reward_features.insert(log.reward_features.end(), psi.begin(), psi.end());
    log.transition_features.insert(log.transition_features.end(), phi.begin(), phi.end());
    log.rewards.push_back(trajectory.rewards[l]);
    log.next_states.push_back(next);

    reward_matrices_[pair].add(psi);
    for (int k = topo.triple_begin(pair); k < topo.triple_end(pair); ++k) {
      transition_matrices_[k].add(phi);
    }
  }
  ++episodes_recorded_;
}

Eigen::MatrixXd SufficientStats::rebuild_reward_matrix(int pair) const {
  const int m = maps_.reward.output_dim();
  const auto design = logs_[pair].reward_design(m);
  return Eigen::MatrixXd::Identity(m, m) + design * design.transpose();
}

Eigen::MatrixXd SufficientStats::rebuild_transition_matrix(int triple) const {
  int pair = 0;
  while (topology_->triple_end(pair) <= triple) ++pair;
  const int n = maps_.transition.output_dim();
  const auto design = logs_[pair].transition_design(n);
  return Eigen::MatrixXd::Identity(n, n) + design * design.transpose();
}

double mqle_score_residual(const Eigen::Ref<const Eigen::MatrixXd>& features,
                           const Eigen::Ref<const Eigen::VectorXd>& responses,
                           const LinkFunction& link,
                           const Eigen::Ref<const Eigen::VectorXd>& params) {
  const Eigen::VectorXd z = features.transpose() * params;
  const Eigen::VectorXd residual =
      responses - z.unaryExpr([&link](double v) { return link.working_mean(v); });
  return (features * residual).norm();
}

namespace {

struct ScoreState {
  Eigen::VectorXd scores;  // w_u^T p
  Eigen::VectorXd gradient;
  double objective = 0.0;  // quasi-log-likelihood
  double gradient_norm = 0.0;
};

ScoreState evaluate(const Eigen::Ref<const Eigen::MatrixXd>& features,
                    const Eigen::Ref<const Eigen::VectorXd>& responses, const LinkFunction& link,
                    const Eigen::VectorXd& params) {
  ScoreState st;
  st.scores = features.transpose() * params;
  Eigen::VectorXd residual(st.scores.size());
  for (Eigen::Index u = 0; u < st.scores.size(); ++u) {
    const double z = st.scores[u];
    residual[u] = responses[u] - link.working_mean(z);
    st.objective += responses[u] * z - link.cumulant(z);
  }
  st.gradient = features * residual;
  st.gradient_norm = st.gradient.norm();
  return st;
}

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

MqleResult solve_mqle(const Eigen::Ref<const Eigen::MatrixXd>& features,
                      const Eigen::Ref<const Eigen::VectorXd>& responses, const LinkFunction& link,
                      double norm_bound, const MqleOptions& options,
                      const std::optional<Eigen::VectorXd>& warm_start) {
  const Eigen::Index dim = features.rows();
  if (features.cols() < 1) throw std::invalid_argument("MQLE needs at least one observation");
  if (responses.size() != features.cols()) {
    throw std::invalid_argument("MQLE response count does not match the feature count");
  }
  if ((responses.array() < 0.0).any() || (responses.array() > 1.0).any()) {
    throw std::invalid_argument("MQLE responses must lie in [0,1]");
  }

  MqleResult result;
  Eigen::VectorXd params = Eigen::VectorXd::Zero(dim);
  if (warm_start && warm_start->size() == dim && finite(*warm_start)) params = *warm_start;

  ScoreState st = evaluate(features, responses, link, params);
  while (true) {
    if (st.gradient_norm <= options.tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= options.max_iterations) break;
    ++result.iterations;

    Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index u = 0; u < features.cols(); ++u) {
      hessian.selfadjointView<Eigen::Lower>().rankUpdate(features.col(u),
                                                         link.working_derivative(st.scores[u]));
    }
    hessian = hessian.selfadjointView<Eigen::Lower>();

    // A tiny ridge keeps the Cholesky factor defined on rank-deficient
    // designs; the gradient lies in the feature span, so the step does too.
    const double scale = std::max(1.0, hessian.diagonal().maxCoeff());
    Eigen::VectorXd direction;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian + 1e-12 * scale * Eigen::MatrixXd::Identity(dim, dim));
    const bool newton_ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (newton_ok) {
      direction = ldlt.solve(st.gradient);
      if (!finite(direction)) direction = st.gradient / scale;
    } else {
      direction = st.gradient / scale;
    }

    auto try_direction = [&](const Eigen::VectorXd& dir) -> bool {
      const double slope = st.gradient.dot(dir);
      double step = 1.0;
      for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
        Eigen::VectorXd candidate = params + step * dir;
        if (!finite(candidate)) continue;
        ScoreState next = evaluate(features, responses, link, candidate);
        const bool ascent = next.objective >= st.objective + 1e-4 * step * slope;
        const bool smaller_score = next.gradient_norm < (1.0 - 1e-4 * step) * st.gradient_norm;
        if (ascent || smaller_score) {
          params = std::move(candidate);
          st = std::move(next);
          return true;
        }
      }
      return false;
    };

    if (!try_direction(direction) && !(newton_ok && try_direction(st.gradient / scale))) break;
  }

  result.residual = st.gradient_norm;
  result.unprojected = params;
  const double norm = params.norm();
  if (norm > norm_bound) {
    params *= norm_bound / norm;
    result.projected = true;
  }
  result.params = std::move(params);
  return result;
}

}  // namespace ctxmdp
