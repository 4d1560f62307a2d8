#include "fieldio/synth.hpp"

#include <cmath>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace flint {

namespace {

void validate(const SynthConfig& cfg) {
  if (cfg.dims.size() != 2 && cfg.dims.size() != 3)
    throw DataError("synth: rank must be 2 or 3");
  for (int d : cfg.dims)
    if (d < 16) throw DataError("synth: extents must be >= 16, got " + std::to_string(d));
  if (cfg.n_timesteps < 1) throw DataError("synth: need at least one timestep");
  if (cfg.n_blobs < 1) throw DataError("synth: need at least one blob");
  if (cfg.motions.empty()) throw DataError("synth: no members configured");
  if (!cfg.sim_params.empty() && cfg.sim_params.size() != cfg.motions.size())
    throw DataError("synth: sim_params count does not match member count");

  double corner = 0.0;
  for (int d : cfg.dims) corner += 0.25 * d * d;
  corner = std::sqrt(corner);  // center-to-corner distance
  for (std::size_t m = 0; m < cfg.motions.size(); ++m) {
    const MotionSpec& mo = cfg.motions[m];
    if (mo.kind == MotionSpec::Kind::translate) {
      if (mo.velocity.size() != cfg.dims.size())
        throw DataError("synth: member " + std::to_string(m) +
                        " velocity components do not match rank");
      for (std::size_t a = 0; a < cfg.dims.size(); ++a)
        if (std::fabs(mo.velocity[a]) > 0.25 * cfg.dims[a])
          throw DataError("synth: member " + std::to_string(m) +
                          " velocity too large (would alias)");
    } else {
      if (std::fabs(mo.rate) * corner > 0.25 * cfg.dims[0])
        throw DataError("synth: member " + std::to_string(m) +
                        " rotation rate too large (would alias)");
    }
  }
}

std::vector<double> domain_center(const std::vector<int>& dims) {
  std::vector<double> c(dims.size());
  for (std::size_t a = 0; a < dims.size(); ++a) c[a] = 0.5 * (dims[a] - 1);
  return c;
}

double wrap(double d, double extent) {
  d -= extent * std::round(d / extent);
  return d;
}

}  // namespace

SynthPlan synth_plan(const SynthConfig& cfg) {
  validate(cfg);
  SynthPlan plan;
  plan.cfg = cfg;
  Rng rng(cfg.seed);
  const int rank = static_cast<int>(cfg.dims.size());
  double min_ext = cfg.dims[0];
  for (int d : cfg.dims) min_ext = std::min(min_ext, static_cast<double>(d));

  for (std::size_t m = 0; m < cfg.motions.size(); ++m) {
    Rng mrng = rng.fork(m);
    std::vector<Blob> blobs(cfg.n_blobs);
    for (auto& b : blobs) {
      b.center.resize(rank);
      for (int a = 0; a < rank; ++a) b.center[a] = mrng.uniform(0.2, 0.8) * cfg.dims[a];
      b.amp = mrng.uniform(0.6, 1.0);
      // tails must be negligible at the periodic seam or rigid motion and
      // minimum-image evaluation stop commuting
      b.sigma = mrng.uniform(min_ext / 14.0, min_ext / 9.0);
    }
    plan.blobs0.push_back(std::move(blobs));
  }
  return plan;
}

std::vector<Blob> blobs_at(const SynthPlan& plan, int member, int frame) {
  const SynthConfig& cfg = plan.cfg;
  const MotionSpec& mo = cfg.motions[member];
  const auto center = domain_center(cfg.dims);
  std::vector<Blob> blobs = plan.blobs0[member];
  for (auto& b : blobs) {
    if (mo.kind == MotionSpec::Kind::translate) {
      for (std::size_t a = 0; a < b.center.size(); ++a) {
        double c = b.center[a] + frame * mo.velocity[a];
        c = std::fmod(c, static_cast<double>(cfg.dims[a]));
        if (c < 0) c += cfg.dims[a];
        b.center[a] = c;
      }
    } else {
      // rotate (y,x) about the domain center; z (if present) is fixed
      const double ang = frame * mo.rate;
      const double cs = std::cos(ang), sn = std::sin(ang);
      const std::size_t ya = b.center.size() - 2, xa = b.center.size() - 1;
      const double dy = b.center[ya] - center[ya];
      const double dx = b.center[xa] - center[xa];
      // counterclockwise in (x,y): x' = x cos - y sin, y' = x sin + y cos
      b.center[xa] = center[xa] + dx * cs - dy * sn;
      b.center[ya] = center[ya] + dx * sn + dy * cs;
    }
  }
  return blobs;
}

double eval_blobs(const std::vector<Blob>& blobs, const std::vector<int>& dims,
                  const std::vector<double>& pos) {
  double v = 0.0;
  for (const auto& b : blobs) {
    double d2 = 0.0;
    for (std::size_t a = 0; a < pos.size(); ++a) {
      const double d = wrap(pos[a] - b.center[a], dims[a]);
      d2 += d * d;
    }
    v += b.amp * std::exp(-d2 / (2.0 * b.sigma * b.sigma));
  }
  return v;
}

FlowGrid analytic_flow(const SynthPlan& plan, int member) {
  const SynthConfig& cfg = plan.cfg;
  const MotionSpec& mo = cfg.motions[member];
  FlowGrid f(cfg.dims);
  const int rank = f.rank();
  const auto center = domain_center(cfg.dims);
  const std::size_t n = f.cells();

  if (mo.kind == MotionSpec::Kind::translate) {
    for (int a = 0; a < rank; ++a)
      std::fill(f.components[a].begin(), f.components[a].end(), mo.velocity[a]);
    return f;
  }

  // v = omega x r about the center: vx = -w*(y-cy), vy = w*(x-cx)
  const int ya = rank - 2, xa = rank - 1;
  std::vector<int> idx(rank, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double dy = idx[ya] - center[ya];
    const double dx = idx[xa] - center[xa];
    f.components[xa][i] = -mo.rate * dy;
    f.components[ya][i] = mo.rate * dx;
    for (int a = rank - 1; a >= 0; --a) {
      if (++idx[a] < cfg.dims[a]) break;
      idx[a] = 0;
    }
  }
  return f;
}

EnsembleSet synth_ensemble(const SynthConfig& cfg) {
  SynthPlan plan = synth_plan(cfg);
  Rng noise_rng(cfg.seed ^ 0x5eedf1e1dULL);
  const int rank = static_cast<int>(cfg.dims.size());
  const std::size_t n = Grid(cfg.dims).cells();

  EnsembleSet es;
  for (std::size_t m = 0; m < cfg.motions.size(); ++m) {
    Member mem;
    const MotionSpec& mo = cfg.motions[m];
    if (!cfg.sim_params.empty()) {
      mem.sim_params = cfg.sim_params[m];
    } else {
      // (vx, vy[, vz], omega)
      for (int a = rank - 1; a >= 0; --a)
        mem.sim_params.push_back(mo.kind == MotionSpec::Kind::translate ? mo.velocity[a] : 0.0);
      mem.sim_params.push_back(mo.kind == MotionSpec::Kind::rotate ? mo.rate : 0.0);
    }

    Rng mnoise = noise_rng.fork(m);
    FlowGrid flow = analytic_flow(plan, static_cast<int>(m));
    for (int t = 0; t < cfg.n_timesteps; ++t) {
      const auto blobs = blobs_at(plan, static_cast<int>(m), t);
      Grid g(cfg.dims);
      std::vector<int> idx(rank, 0);
      std::vector<double> pos(rank);
      for (std::size_t i = 0; i < n; ++i) {
        for (int a = 0; a < rank; ++a) pos[a] = idx[a];
        g.values[i] = eval_blobs(blobs, cfg.dims, pos);
        for (int a = rank - 1; a >= 0; --a) {
          if (++idx[a] < cfg.dims[a]) break;
          idx[a] = 0;
        }
      }
      if (cfg.noise_sigma > 0.0)
        for (auto& v : g.values) v += mnoise.normal(0.0, cfg.noise_sigma);
      mem.timesteps.push_back(std::move(g));
      mem.flows.push_back(flow);
    }
    es.members.push_back(std::move(mem));
  }
  es.validate();
  return es;
}

}  // namespace flint
