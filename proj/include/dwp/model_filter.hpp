#pragma once
// Model scoring: extensibility, tail plausibility, AICc distance, and
// leave-one-out influence; ranking and default-model selection.
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "distributions.hpp"
#include "glm.hpp"

namespace dwp {

struct no_viable_model : std::runtime_error {
  explicit no_viable_model(const std::string& m) : std::runtime_error(m) {}
};

struct FilterThresholds {
  double rtail_dist1 = 200.0, rtail_p1 = 0.01;
  double rtail_dist2 = 150.0, rtail_p2 = 0.05;
  double ltail_dist1 = 20.0, ltail_p1 = 0.50;
  double ltail_dist2 = 50.0, ltail_p2 = 0.90;
  double aicc_max_delta = 10.0;
  double hin_delta_pwin = 0.10;
};

struct ModelScore {
  Form form = Form::constant;
  bool fitted = false;
  int extensible = 0, rtail = 0, ltail = 0, aicc = 0, hin = 0;
  double deltaAICc = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> hin_offenders;  // offending design-row indices

  int pass_count() const { return extensible + rtail + ltail + aicc + hin; }
};

struct ScoreTable {
  std::vector<ModelScore> rows;  // in ranked order
  std::string selected;
  bool all_pass = false;
};

// leave-one-out refits over rows with carcasses: fails when any deletion
// flips extensibility, prevents convergence, or moves p_win beyond the
// threshold (the quantity the filter exists to protect)
inline std::pair<int, std::vector<int>> high_influence_test(
    const FittedGLM& fit, const Design& design, double srad,
    const FilterThresholds& thr = {}) {
  const bool base_ext = extensible(fit.form, fit.distance_beta());
  double base_pwin = 0.0;
  if (base_ext) base_pwin = DistanceDistribution(fit.form, fit.distance_beta()).pdd(srad);
  std::vector<int> offenders;
  for (int i = 0; i < design.n(); ++i) {
    if (design.y[i] <= 0.0) continue;
    bool bad = false;
    try {
      const FittedGLM refit = fit_poisson(design.without(i));
      if (!refit.converged) {
        bad = true;
      } else {
        const bool ext = extensible(refit.form, refit.distance_beta());
        if (ext != base_ext) {
          bad = true;
        } else if (ext && base_ext) {
          const double pwin =
              DistanceDistribution(refit.form, refit.distance_beta()).pdd(srad);
          if (std::fabs(pwin - base_pwin) > thr.hin_delta_pwin) bad = true;
        }
      }
    } catch (const std::exception&) {
      bad = true;
    }
    if (bad) offenders.push_back(i);
  }
  return {offenders.empty() ? 1 : 0, offenders};
}

using DesignProvider = std::function<Design(Form)>;

inline ScoreTable filter_models_impl(const std::vector<BatteryFit>& fits, double srad,
                                     const FilterThresholds& thr,
                                     const DesignProvider& provider) {
  double min_aicc = std::numeric_limits<double>::infinity();
  int n_ok = 0;
  for (const auto& bf : fits) {
    if (bf.ok) {
      ++n_ok;
      min_aicc = std::min(min_aicc, bf.fit.aicc);
    }
  }
  if (n_ok == 0) throw no_viable_model("no model converged");

  ScoreTable tab;
  for (const auto& bf : fits) {
    ModelScore s;
    s.form = bf.form;
    s.fitted = bf.ok;
    if (bf.ok) {
      s.deltaAICc = bf.fit.aicc - min_aicc;
      s.aicc = s.deltaAICc <= thr.aicc_max_delta ? 1 : 0;
      const auto db = bf.fit.distance_beta();
      s.extensible = extensible(bf.form, db) ? 1 : 0;
      if (s.extensible) {
        DistanceDistribution dist(bf.form, db);
        s.rtail = (1.0 - dist.pdd(thr.rtail_dist1) <= thr.rtail_p1 &&
                   1.0 - dist.pdd(thr.rtail_dist2) <= thr.rtail_p2)
                      ? 1
                      : 0;
        s.ltail = (dist.pdd(thr.ltail_dist1) <= thr.ltail_p1 &&
                   dist.pdd(thr.ltail_dist2) <= thr.ltail_p2)
                      ? 1
                      : 0;
      }
      auto [flag, off] = high_influence_test(bf.fit, provider(bf.form), srad, thr);
      s.hin = flag;
      s.hin_offenders = std::move(off);
    }
    tab.rows.push_back(std::move(s));
  }

  std::stable_sort(tab.rows.begin(), tab.rows.end(), [](const ModelScore& a,
                                                        const ModelScore& b) {
    if (a.fitted != b.fitted) return a.fitted;
    if (a.pass_count() != b.pass_count()) return a.pass_count() > b.pass_count();
    const auto ta = std::make_tuple(a.extensible, a.rtail, a.ltail, a.aicc, a.hin);
    const auto tb = std::make_tuple(b.extensible, b.rtail, b.ltail, b.aicc, b.hin);
    if (ta != tb) return ta > tb;
    const double da = std::isnan(a.deltaAICc) ? std::numeric_limits<double>::infinity()
                                              : a.deltaAICc;
    const double db = std::isnan(b.deltaAICc) ? std::numeric_limits<double>::infinity()
                                              : b.deltaAICc;
    if (da != db) return da < db;
    return form_name(a.form) < form_name(b.form);
  });

  for (const auto& s : tab.rows) {
    if (s.fitted && s.pass_count() == 5) {
      tab.selected = form_name(s.form);
      tab.all_pass = true;
      break;
    }
  }
  if (tab.selected.empty()) {
    for (const auto& s : tab.rows) {
      if (s.fitted) {
        tab.selected = form_name(s.form);
        break;
      }
    }
  }
  return tab;
}

inline ScoreTable filter_models(const std::vector<BatteryFit>& fits, const RingProfile& p,
                                const FilterThresholds& thr = {}) {
  return filter_models_impl(fits, p.srad, thr,
                            [&p](Form f) { return build_design(p, f); });
}

inline ScoreTable filter_models(const std::vector<BatteryFit>& fits, const GridProfile& g,
                                const FilterThresholds& thr = {}) {
  double srad = 0.0;
  for (const auto& t : g.turbines)
    for (const auto& c : t.cells) srad = std::max(srad, c.r);
  return filter_models_impl(fits, srad, thr,
                            [&g](Form f) { return build_design(g, f); });
}

}  // namespace dwp
