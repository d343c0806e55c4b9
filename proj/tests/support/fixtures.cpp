#include "support/fixtures.hpp"

#include <cmath>

namespace dcfg::test {

SwitchingChain make_switching_chain(Rng& rng, int num_states, int num_steps) {
  SwitchingChain chain;
  chain.num_states = num_states;
  chain.num_steps = num_steps;
  std::vector<double> gains(static_cast<std::size_t>(num_states));
  std::vector<double> sigmas(static_cast<std::size_t>(num_states));
  for (int s = 0; s < num_states; ++s) {
    gains[static_cast<std::size_t>(s)] = rng.uniform(-1.5, 1.5);
    sigmas[static_cast<std::size_t>(s)] = rng.uniform(0.2, 2.0);
  }

  for (int t = 0; t <= num_steps; ++t) {
    chain.graph.add_variable(VariableKey::continuous(key('y', static_cast<std::uint64_t>(t)),
                                                     ManifoldKind::vector_space(1)));
    chain.states[key('y', static_cast<std::uint64_t>(t))] =
        Eigen::VectorXd::Constant(1, rng.normal());
  }
  for (int t = 0; t < num_steps; ++t) {
    chain.graph.add_variable(
        VariableKey::discrete(key('d', static_cast<std::uint64_t>(t)), num_states));
    chain.mode_keys.push_back(key('d', static_cast<std::uint64_t>(t)));
  }

  // Mode-dependent transition residual y_{t+1} - a_d * y_t.
  for (int t = 0; t < num_steps; ++t) {
    Factor f;
    f.keys = {chain.graph.variable(key('y', static_cast<std::uint64_t>(t))),
              chain.graph.variable(key('y', static_cast<std::uint64_t>(t + 1))),
              chain.graph.variable(chain.mode_keys[static_cast<std::size_t>(t)])};
    HybridResidualPayload payload;
    payload.num_continuous = 2;
    payload.residual = [gains](const std::vector<Value>& v, std::size_t a) {
      const double prev = std::get<Eigen::VectorXd>(v[0])[0];
      const double next = std::get<Eigen::VectorXd>(v[1])[0];
      return Eigen::VectorXd::Constant(1, next - gains[a] * prev);
    };
    for (int s = 0; s < num_states; ++s) {
      payload.noise.push_back(NoiseModel::isotropic_sigma(1, sigmas[static_cast<std::size_t>(s)]));
    }
    payload.offset = Eigen::VectorXd::Zero(num_states);
    f.payload = std::move(payload);
    chain.graph.add_factor(std::move(f));
  }

  // Random mode transition tables between consecutive steps.
  for (int t = 0; t + 1 < num_steps; ++t) {
    Eigen::VectorXd values(num_states * num_states);
    for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = rng.uniform(0.05, 1.0);
    chain.graph.add_factor(make_discrete_table(
        {chain.graph.variable(chain.mode_keys[static_cast<std::size_t>(t)]),
         chain.graph.variable(chain.mode_keys[static_cast<std::size_t>(t) + 1])},
        values));
    Eigen::MatrixXd costs(num_states, num_states);
    for (int p = 0; p < num_states; ++p) {
      for (int s = 0; s < num_states; ++s) {
        costs(p, s) = -std::log(values[p * num_states + s]);
      }
    }
    chain.transition_costs.push_back(std::move(costs));
  }
  return chain;
}

std::vector<Eigen::MatrixXd> finite_difference_jacobians(
    const std::function<Eigen::VectorXd(const std::vector<Value>&)>& fn,
    const std::vector<Value>& values, double h) {
  std::vector<Eigen::MatrixXd> out;
  std::vector<Value> work = values;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const int td = kind_of(values[k]).tangent_dim();
    Eigen::MatrixXd block;
    for (int d = 0; d < td; ++d) {
      Eigen::VectorXd delta = Eigen::VectorXd::Zero(td);
      delta[d] = h;
      work[k] = retract(values[k], delta);
      const Eigen::VectorXd plus = fn(work);
      delta[d] = -h;
      work[k] = retract(values[k], delta);
      const Eigen::VectorXd minus = fn(work);
      work[k] = values[k];
      if (block.size() == 0) block.resize(plus.size(), td);
      block.col(d) = (plus - minus) / (2.0 * h);
    }
    out.push_back(std::move(block));
  }
  return out;
}

double factor_jacobian_error(const Factor& factor, const std::vector<Value>& values,
                             std::size_t discrete_assignment) {
  std::function<Eigen::VectorXd(const std::vector<Value>&)> fn;
  std::vector<Eigen::MatrixXd> analytic;
  if (const auto* c = std::get_if<ContinuousResidualPayload>(&factor.payload)) {
    fn = c->residual;
    analytic = c->jacobian(values);
  } else if (const auto* hp = std::get_if<HybridResidualPayload>(&factor.payload)) {
    fn = [hp, discrete_assignment](const std::vector<Value>& v) {
      return hp->residual(v, discrete_assignment);
    };
    analytic = hp->jacobian(values, discrete_assignment);
  } else if (const auto* m = std::get_if<MaxMixturePayload>(&factor.payload)) {
    const MixtureComponent& comp = m->components[discrete_assignment];
    fn = comp.residual;
    analytic = comp.jacobian(values);
  } else {
    return 0.0;
  }
  const auto fd = finite_difference_jacobians(fn, values);
  double worst = 0.0;
  for (std::size_t b = 0; b < fd.size(); ++b) {
    const double scale = std::max(1.0, fd[b].lpNorm<Eigen::Infinity>());
    worst = std::max(worst, (analytic[b] - fd[b]).lpNorm<Eigen::Infinity>() / scale);
  }
  return worst;
}

}  // namespace dcfg::test
