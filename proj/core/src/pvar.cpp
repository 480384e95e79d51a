#include <irga/pvar.hpp>

#include <irga/error.hpp>
#include <irga/parallel.hpp>
#include <irga/rotation.hpp>

#include <chrono>
#include <cmath>

namespace irga {

EquationPosterior estimate_equation(const PanelDataset& ds, int country, int equation, const PvarOptions& opts) {
  const auto started = std::chrono::steady_clock::now();
  const EquationDesign design = build_equation_design(ds, country, equation, opts.lags);
  const RotationSplit split = qr_rotation(design);

  EquationPosterior ep;
  ep.country = country;
  ep.equation = equation;
  ep.variable = ds.column(country, equation);
  ep.own_columns = design.own_columns;
  ep.other_columns = design.other_columns;
  ep.other_classes = design.other_classes;
  ep.approx = vamp_fit(split.y2, split.z2, opts.vamp, design.other_classes);

  const PluginLikelihood pl = PluginLikelihood::from_rotation(split, ep.approx);
  McmcConfig mcmc = opts.mcmc;
  mcmc.seed = derive_seed(opts.mcmc.seed, "mcmc", country, equation);
  ep.chain = run_equation_mcmc(pl, mcmc);
  ep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return ep;
}

PvarPosterior estimate_pvar(const PanelDataset& ds, const PvarOptions& opts) {
  opts.vamp.validate();
  opts.mcmc.validate();
  PvarPosterior post;
  post.n = ds.n();
  post.lags = opts.lags;
  post.country_of = ds.country_map();
  post.equations.resize(static_cast<std::size_t>(ds.n()));

  parallel_for(static_cast<std::size_t>(ds.n()), opts.threads, [&](std::size_t col) {
    const int c = ds.country_of(static_cast<int>(col));
    const int j = static_cast<int>(col) - ds.offset(c);
    const std::string where = "equation (" + ds.countries()[c].code + ", " + ds.variable(static_cast<int>(col)).code + "): ";
    try {
      post.equations[col] = estimate_equation(ds, c, j, opts);
    } catch (const ComputeError& e) {
      throw ComputeError(where + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    } catch (const Error& e) {
      throw Error(where + e.what());
    }
  });
  return post;
}

StructuralDraw structural_draw(const PvarPosterior& post, int draw_index, Rng& rng, bool propagate_b_uncertainty) {
  const int n = post.n;
  const int p = post.lags;
  if (draw_index < 0 || draw_index >= post.n_save()) {
    throw ValidationError("draw index " + std::to_string(draw_index) + " outside the saved chain of " +
                          std::to_string(post.n_save()));
  }
  StructuralDraw s;
  s.l = Eigen::MatrixXd::Zero(n, n);
  s.phi_s = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(n) * p);
  s.h.resize(n);

  auto place = [&](int row, const RegressorRef& ref, double value) {
    if (ref.lag == 0) {
      s.l(row, ref.variable) = value;
    } else {
      s.phi_s(row, static_cast<Eigen::Index>(ref.lag - 1) * n + ref.variable) = value;
    }
  };

  for (const auto& eq : post.equations) {
    const int row = eq.variable;
    for (int c = 0; c < eq.k(); ++c) {
      place(row, eq.own_columns[static_cast<std::size_t>(c)], eq.chain.a_draws(draw_index, c));
    }
    Eigen::VectorXd b = eq.approx.mean;
    if (propagate_b_uncertainty && b.size() > 0) {
      b += std::sqrt(eq.approx.var_scalar) * draw_std_normal(rng, b.size());
    }
    for (int c = 0; c < eq.K(); ++c) {
      place(row, eq.other_columns[static_cast<std::size_t>(c)], b[c]);
    }
    s.h[row] = eq.approx.sigma2_hat;
  }
  return s;
}

SystemDraw to_reduced_form(const StructuralDraw& s) {
  const Eigen::Index n = s.l.rows();
  const Eigen::MatrixXd i_minus_l = Eigen::MatrixXd::Identity(n, n) - s.l;
  SystemDraw sd;
  sd.u = i_minus_l.triangularView<Eigen::UnitLower>().solve(Eigen::MatrixXd::Identity(n, n));
  sd.phi = sd.u * s.phi_s;
  sd.h = s.h;
  return sd;
}

SystemDraw assemble_system_draw(const PvarPosterior& post, int draw_index, Rng& rng, bool propagate_b_uncertainty) {
  return to_reduced_form(structural_draw(post, draw_index, rng, propagate_b_uncertainty));
}

StructuralDraw to_structural(const SystemDraw& sd) {
  const Eigen::Index n = sd.u.rows();
  const Eigen::MatrixXd u_inv = sd.u.triangularView<Eigen::UnitLower>().solve(Eigen::MatrixXd::Identity(n, n));
  StructuralDraw s;
  s.l = Eigen::MatrixXd::Identity(n, n) - u_inv;
  s.l.diagonal().setZero();
  s.phi_s = u_inv * sd.phi;
  s.h = sd.h;
  return s;
}

} // namespace irga
