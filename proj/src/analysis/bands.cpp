#include "nwpc/analysis/bands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "nwpc/analysis/modes.hpp"
#include "nwpc/errors.hpp"

namespace nwpc::analysis {

std::vector<BandMode> BandStructure::band(const std::string& name) const {
    std::vector<BandMode> out;
    for (const auto& e : entries)
        if (e.band == name) out.push_back(e);
    std::sort(out.begin(), out.end(), [](const BandMode& a, const BandMode& b) { return a.k < b.k; });
    return out;
}

void BandStructure::write_csv(std::ostream& os) const {
    os << "# k_a_over_2pi,omega_a_over_2pi_c,band,te_fraction,q_wg\n";
    os.precision(10);
    for (const auto& e : entries)
        os << e.k << ',' << e.frequency << ',' << e.band << (e.ambiguous ? "?" : "") << ',' << e.te_fraction << ','
           << e.q_wg << '\n';
}

double BandStructure::lightline_at(const std::string& name, double k) const {
    for (const auto& l : lightlines) {
        if (l.name != name || l.points.empty()) continue;
        const auto& p = l.points;
        if (k < p.front().first || k > p.back().first) return std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 1; i < p.size(); ++i) {
            if (k <= p[i].first) {
                const double t = (k - p[i - 1].first) / (p[i].first - p[i - 1].first);
                return p[i - 1].second + t * (p[i].second - p[i - 1].second);
            }
        }
        return p.back().second;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace {

struct Track {
    std::vector<std::size_t> members;  // indices into the flat entry list
    double last_f = 0, last_te = 0, last_k = 0;
};

}  // namespace

BandStructure assemble_band_structure(const std::vector<ModesAtK>& per_k_in, const MaterialStack& stack,
                                      const std::vector<std::pair<double, double>>& structured, double a_nm,
                                      double q_min) {
    BandStructure bs;
    bs.a_nm = a_nm;
    auto per_k = per_k_in;
    std::sort(per_k.begin(), per_k.end(), [](const ModesAtK& a, const ModesAtK& b) { return a.k < b.k; });

    std::vector<BandMode> flat;
    std::vector<Track> tracks;
    // Frequency jumps are compared to this scale; polarization differences add a
    // penalty equal to one scale unit per unit of te_fraction.
    double f_scale = 0.02;
    for (const auto& group : per_k) {
        std::vector<std::size_t> cand;
        for (const auto& m : group.modes) {
            if (!(m.q_wg >= q_min)) continue;
            BandMode e = m;
            e.k = group.k;
            flat.push_back(e);
            cand.push_back(flat.size() - 1);
        }
        std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return flat[a].frequency < flat[b].frequency; });
        struct Pair {
            double cost;
            std::size_t track, cand;
        };
        std::vector<Pair> pairs;
        for (std::size_t t = 0; t < tracks.size(); ++t)
            for (std::size_t c = 0; c < cand.size(); ++c) {
                const auto& e = flat[cand[c]];
                // Symmetry classes do not mix: a TE-like mode never continues a TM-like band.
                if (is_te_like(e.te_fraction) != is_te_like(tracks[t].last_te)) continue;
                const double cost = std::abs(e.frequency - tracks[t].last_f) / f_scale +
                                    std::abs(e.te_fraction - tracks[t].last_te);
                pairs.push_back({cost, t, c});
            }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.cost < b.cost; });
        std::vector<bool> t_used(tracks.size(), false), c_used(cand.size(), false);
        for (const auto& p : pairs) {
            if (t_used[p.track] || c_used[p.cand]) continue;
            if (p.cost > 3.0) continue;  // too far to be the same band
            t_used[p.track] = c_used[p.cand] = true;
            auto& tr = tracks[p.track];
            const auto& e = flat[cand[p.cand]];
            // A competing pairing nearly as good marks both modes as ambiguous.
            for (const auto& q : pairs) {
                if (&q == &p || q.track != p.track || q.cand == p.cand) continue;
                if (q.cost < p.cost + 0.1) {
                    flat[cand[p.cand]].ambiguous = true;
                    flat[cand[q.cand]].ambiguous = true;
                }
            }
            tr.members.push_back(cand[p.cand]);
            tr.last_f = e.frequency;
            tr.last_te = e.te_fraction;
            tr.last_k = group.k;
        }
        for (std::size_t c = 0; c < cand.size(); ++c) {
            if (c_used[c]) continue;
            Track tr;
            tr.members.push_back(cand[c]);
            tr.last_f = flat[cand[c]].frequency;
            tr.last_te = flat[cand[c]].te_fraction;
            tr.last_k = group.k;
            tracks.push_back(tr);
        }
    }

    // Label by polarization class, ordered by mean frequency.
    struct Summary {
        std::size_t track;
        double mean_f, mean_te;
    };
    std::vector<Summary> sums;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        double f = 0, te = 0;
        for (auto i : tracks[t].members) {
            f += flat[i].frequency;
            te += flat[i].te_fraction;
        }
        const double n = static_cast<double>(tracks[t].members.size());
        sums.push_back({t, f / n, te / n});
    }
    std::sort(sums.begin(), sums.end(), [](const Summary& a, const Summary& b) { return a.mean_f < b.mean_f; });
    int te_count = 0, tm_count = 0;
    for (const auto& s : sums) {
        const bool te = s.mean_te > 0.5;
        const std::string name = te ? "TE-" + std::to_string(++te_count) : "TM-" + std::to_string(++tm_count);
        for (auto i : tracks[s.track].members) flat[i].band = name;
    }
    std::sort(flat.begin(), flat.end(), [](const BandMode& a, const BandMode& b) {
        return a.k != b.k ? a.k < b.k : a.frequency < b.frequency;
    });
    bs.entries = std::move(flat);

    // Bulk lightlines over the sampled k range (the whole zone if empty).
    double k_lo = 0.0, k_hi = 0.5;
    if (!per_k.empty()) {
        k_lo = std::min(0.0, per_k.front().k);
        k_hi = std::max(0.5, per_k.back().k);
    }
    for (const auto& [name, n] : std::vector<std::pair<std::string, double>>{
             {"air", stack.n_air}, {"diamond", stack.n_dia}, {"gap", stack.n_gap}}) {
        Lightline l{name, {}};
        const int samples = 51;
        for (int i = 0; i < samples; ++i) {
            const double k = k_lo + (k_hi - k_lo) * i / (samples - 1);
            l.points.emplace_back(k, lightline_frequency(k, n));
        }
        bs.lightlines.push_back(std::move(l));
    }
    if (!structured.empty()) {
        Lightline l{"structured", structured};
        std::sort(l.points.begin(), l.points.end());
        bs.lightlines.push_back(std::move(l));
    }
    return bs;
}

std::vector<std::pair<double, double>> group_index(const std::vector<std::pair<double, double>>& band) {
    const std::size_t n = band.size();
    if (n < 3) throw ConfigError("group index: need at least 3 points");
    for (std::size_t i = 1; i < n; ++i)
        if (!(band[i].first > band[i - 1].first)) throw ConfigError("group index: k must be strictly increasing");
    auto slope3 = [&](std::size_t i0, std::size_t at) {
        // Derivative at x[at] of the parabola through i0, i0+1, i0+2.
        const double x0 = band[i0].first, x1 = band[i0 + 1].first, x2 = band[i0 + 2].first;
        const double y0 = band[i0].second, y1 = band[i0 + 1].second, y2 = band[i0 + 2].second;
        const double x = band[at].first;
        const double d0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
        const double d1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
        const double d2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
        return y0 * d0 + y1 * d1 + y2 * d2;
    };
    // Slopes below roundoff of the band's own scale count as a flat band edge.
    double y_scale = 0.0;
    for (const auto& [k, w] : band) y_scale = std::max(y_scale, std::abs(w));
    const double flat = 1e-12 * y_scale / (band.back().first - band.front().first);
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t i0 = i == 0 ? 0 : (i == n - 1 ? n - 3 : i - 1);
        const double vg = slope3(i0, i);
        const double ng = std::abs(vg) <= flat ? std::numeric_limits<double>::infinity() : 1.0 / std::abs(vg);
        out.emplace_back(band[i].second, ng);
    }
    return out;
}

Loss waveguide_loss(double omega, double q_wg, double v_g) {
    if (!(omega > 0) || !(q_wg > 0)) throw ConfigError("waveguide loss: omega and q_wg must be positive");
    if (!(v_g > 0)) throw ConfigError("waveguide loss: group velocity must be positive (band edge?)");
    Loss l;
    l.per_m = std::isinf(q_wg) ? 0.0 : omega / (q_wg * v_g);
    l.db_per_cm = kDbPerNeper * l.per_m / 100.0;
    return l;
}

std::vector<PotentialPoint> band_edge_potential(const HoleLayout& layout,
                                                const std::function<double(double)>& band_edge) {
    layout.validate();
    std::map<long long, double> cache;  // keyed by spacing in pm
    std::vector<PotentialPoint> out;
    for (std::size_t i = 1; i < layout.holes.size(); ++i) {
        PotentialPoint p;
        p.x_nm = 0.5 * (layout.holes[i].x + layout.holes[i - 1].x);
        p.a_cav_nm = layout.holes[i].x - layout.holes[i - 1].x;
        const long long key = std::llround(p.a_cav_nm * 1000.0);
        auto it = cache.find(key);
        if (it == cache.end()) {
            try {
                it = cache.emplace(key, band_edge(p.a_cav_nm)).first;
            } catch (const std::exception& e) {
                std::ostringstream msg;
                msg << "band edge failed at x = " << p.x_nm << " nm (a = " << p.a_cav_nm << " nm): " << e.what();
                throw NumericalError(msg.str());
            }
        }
        p.frequency = it->second;
        out.push_back(p);
    }
    return out;
}

}  // namespace nwpc::analysis
