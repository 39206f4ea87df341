#include "pks/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pks/grid_ot.hpp"

namespace pks {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double sq(double v) { return v * v; }

double arc_cost_value(const Vec2& a, const Vec2& b, OTCost kind) {
    const double d2 = sq(a.x - b.x) + sq(a.y - b.y);
    return kind == OTCost::SquaredEuclidean ? d2 : std::sqrt(d2);
}
}  // namespace

DiscreteMeasure DiscreteMeasure::make(std::vector<Vec2> pts, std::vector<double> w) {
    if (pts.size() != w.size() || pts.empty())
        throw ConfigError("measure needs matching nonempty support and weights");
    double total = 0.0;
    for (double x : w) {
        if (x < 0.0) throw ConfigError("measure weights must be nonnegative");
        total += x;
    }
    if (!(total > 0.0)) throw DegenerateFieldError("measure has zero total mass");
    return DiscreteMeasure{std::move(pts), std::move(w), total};
}

DiscreteMeasure measure_from_field(const DensityField& field, int species,
                                   double drop_below) {
    const auto& g = field.grid;
    const auto& v = field.values.at(species);
    std::vector<Vec2> pts;
    std::vector<double> w;
    const double area = g.cell_area();
    for (int i = 0; i < g.cells_per_side; ++i)
        for (int j = 0; j < g.cells_per_side; ++j)
            if (v(i, j) > drop_below) {
                pts.push_back({g.coord(i), g.coord(j)});
                w.push_back(v(i, j) * area);
            }
    return DiscreteMeasure::make(std::move(pts), std::move(w));
}

// ---------------------------------------------------------------------------
// Exact solver: network simplex on the dense bipartite transportation graph.
//
// Nodes 0..ns-1 are sources, ns..ns+nt-1 sinks, ns+nt the artificial root.
// Real arc e = i*nt + j runs source i -> sink j with cost evaluated on the
// fly from the support points (the dense cost matrix is never stored).
// Artificial arcs connect every source to the root and the root to every
// sink at a cost exceeding any real arc, which yields the initial feasible
// tree and drains to zero flow at optimality.
// ---------------------------------------------------------------------------

namespace {

class TransportSimplex {
  public:
    TransportSimplex(const DiscreteMeasure& mu, const DiscreteMeasure& nu, OTCost kind)
        : mu_(mu), nu_(nu), kind_(kind), ns_(mu.size()), nt_(nu.size()) {
        root_ = ns_ + nt_;
        n_real_ = static_cast<long>(ns_) * nt_;
        double cmax = 0.0;
        for (const auto& p : mu_.support)
            for (const auto& q : nu_.support)
                cmax = std::max(cmax, arc_cost_value(p, q, kind_));
        big_ = 2.0 * cmax + 1.0;
        tol_ = 1e-13 * std::max(1.0, cmax);
    }

    void solve() {
        init_tree();
        const long block = std::max<long>(64, static_cast<long>(std::sqrt(double(n_real_))));
        long cursor = 0;
        long degenerate_streak = 0;
        bool bland = false;
        const long pivot_cap = 2000L * (ns_ + nt_) + 200000L;
        for (long pivot = 0;; ++pivot) {
            if (pivot > pivot_cap)
                throw NumericalError("network simplex exceeded pivot cap");
            long enter = bland ? find_entering_bland() : find_entering_block(block, cursor);
            if (enter < 0) break;
            const double delta = apply_pivot(enter);
            ++iterations_;
            if (delta <= tol_) {
                if (++degenerate_streak > 4L * (ns_ + nt_)) bland = true;
            } else {
                degenerate_streak = 0;
            }
        }
        finalize();
    }

    double cost_value() const { return cost_; }
    int iterations() const { return iterations_; }
    const std::vector<double>& potentials() const { return pi_; }
    const std::vector<int>& tree_parent() const { return parent_; }
    const std::vector<long>& tree_arc() const { return pred_arc_; }
    const std::vector<double>& tree_flow() const { return flow_; }

    long real_arcs() const { return n_real_; }
    bool is_real(long e) const { return e < n_real_; }
    int arc_tail(long e) const {
        if (e < n_real_) return static_cast<int>(e / nt_);
        if (e < n_real_ + ns_) return static_cast<int>(e - n_real_);
        return root_;
    }
    int arc_head(long e) const {
        if (e < n_real_) return ns_ + static_cast<int>(e % nt_);
        if (e < n_real_ + ns_) return root_;
        return ns_ + static_cast<int>(e - n_real_ - ns_);
    }
    double arc_cost(long e) const {
        if (e >= n_real_) return big_;
        const int i = static_cast<int>(e / nt_);
        const int j = static_cast<int>(e % nt_);
        return arc_cost_value(mu_.support[i], nu_.support[j], kind_);
    }

  private:
    void init_tree() {
        const int v = root_ + 1;
        parent_.assign(v, -1);
        pred_arc_.assign(v, -1);
        flow_.assign(v, 0.0);
        pi_.assign(v, 0.0);
        depth_.assign(v, 0);
        for (int i = 0; i < ns_; ++i) {
            parent_[i] = root_;
            pred_arc_[i] = n_real_ + i;        // source -> root
            flow_[i] = mu_.weights[i];
            pi_[i] = big_;
            depth_[i] = 1;
        }
        for (int j = 0; j < nt_; ++j) {
            const int node = ns_ + j;
            parent_[node] = root_;
            pred_arc_[node] = n_real_ + ns_ + j;  // root -> sink
            flow_[node] = nu_.weights[j];
            pi_[node] = -big_;
            depth_[node] = 1;
        }
    }

    double reduced_cost(long e) const {
        return arc_cost(e) - pi_[arc_tail(e)] + pi_[arc_head(e)];
    }

    long find_entering_block(long block, long& cursor) const {
        long best = -1;
        double best_rc = -tol_;
        long scanned = 0;
        long e = cursor;
        while (scanned < n_real_) {
            const double rc = reduced_cost(e);
            if (rc < best_rc) {
                best_rc = rc;
                best = e;
            }
            ++e;
            if (e == n_real_) e = 0;
            ++scanned;
            if (best >= 0 && scanned % block == 0) break;
        }
        cursor = e;
        return best;
    }

    long find_entering_bland() const {
        for (long e = 0; e < n_real_; ++e)
            if (reduced_cost(e) < -tol_) return e;
        return -1;
    }

    // Pushes flow around the cycle closed by arc `enter` and re-hangs the tree.
    double apply_pivot(long enter) {
        const int u = arc_tail(enter);
        const int v = arc_head(enter);

        // Max push: entering arc is uncapacitated; bounded by flows on cycle
        // arcs oriented against the push direction.
        double delta = kInf;
        int leave_node = -1;  // node whose pred arc leaves the tree
        // Tie-breaking keeps the basis strongly feasible (Cunningham): scanning
        // the cycle in the push direction starting at the apex, take the last
        // blocking arc. That is the u-side arc nearest u (first met walking up
        // from u, ties not replaced) and the v-side arc nearest the apex (ties
        // replaced), with v-side ties beating u-side ones.
        int x = u, y = v;
        while (x != y) {
            if (depth_[x] >= depth_[y]) {
                // u-side: push runs parent->child here, arcs pointing to the
                // parent lose flow.
                const bool against = arc_tail(pred_arc_[x]) == x;
                if (against && flow_[x] < delta) {
                    delta = flow_[x];
                    leave_node = x;
                }
                x = parent_[x];
            } else {
                // v-side: push runs child->parent, arcs pointing away from the
                // parent lose flow.
                const bool against = arc_head(pred_arc_[y]) == y;
                if (against && flow_[y] <= delta) {
                    delta = flow_[y];
                    leave_node = y;
                }
                y = parent_[y];
            }
        }
        const int apex = x;
        if (leave_node < 0)
            throw NumericalError("network simplex found an unbounded cycle");

        // Apply the push.
        if (delta > 0.0) {
            for (int w = u; w != apex; w = parent_[w]) {
                const bool toward_parent = arc_tail(pred_arc_[w]) == w;
                flow_[w] += toward_parent ? -delta : delta;
            }
            for (int w = v; w != apex; w = parent_[w]) {
                const bool toward_parent = arc_tail(pred_arc_[w]) == w;
                flow_[w] += toward_parent ? delta : -delta;
            }
        }

        // Re-hang: the subtree cut off below leave_node is re-rooted at the
        // entering arc endpoint it contains.
        const bool on_u_side = side_contains(leave_node, u);
        const int w_new = on_u_side ? u : v;   // endpoint inside the cut subtree
        const int z_anchor = on_u_side ? v : u;

        // Reverse parent pointers along w_new .. leave_node.
        int prev = z_anchor;
        long prev_arc = enter;
        double prev_flow = delta;
        int cur = w_new;
        while (true) {
            const int nxt = parent_[cur];
            const long cur_arc = pred_arc_[cur];
            const double cur_flow = flow_[cur];
            parent_[cur] = prev;
            pred_arc_[cur] = prev_arc;
            flow_[cur] = prev_flow;
            if (cur == leave_node) break;
            prev = cur;
            prev_arc = cur_arc;
            prev_flow = cur_flow;
            cur = nxt;
        }
        rebuild_potentials();
        return delta;
    }

    // True if `probe` lies on the tree path from leave_node downward, i.e. the
    // cut subtree (below leave_node's old arc) contains probe. Since probe is
    // one of the cycle endpoints, walking up from probe hits leave_node before
    // the apex iff it is inside.
    bool side_contains(int leave_node, int probe) const {
        for (int w = probe; w != -1; w = parent_[w]) {
            if (w == leave_node) return true;
        }
        return false;
    }

    void rebuild_potentials() {
        const int v_count = root_ + 1;
        std::vector<std::vector<int>> kids(v_count);
        for (int w = 0; w < v_count; ++w)
            if (parent_[w] >= 0) kids[parent_[w]].push_back(w);
        std::vector<int> stack{root_};
        pi_[root_] = 0.0;
        depth_[root_] = 0;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            for (int c : kids[p]) {
                depth_[c] = depth_[p] + 1;
                const long e = pred_arc_[c];
                // zero reduced cost on tree arcs: c - pi[tail] + pi[head] = 0
                if (arc_tail(e) == c)
                    pi_[c] = arc_cost(e) + pi_[arc_head(e)];
                else
                    pi_[c] = pi_[arc_tail(e)] - arc_cost(e);
                stack.push_back(c);
            }
        }
    }

    void finalize() {
        cost_ = 0.0;
        const double total = mu_.total_mass;
        for (int w = 0; w < root_; ++w) {
            const long e = pred_arc_[w];
            if (e < 0) continue;
            if (!is_real(e)) {
                if (flow_[w] > 1e-9 * total)
                    throw NumericalError("network simplex left artificial flow");
                continue;
            }
            cost_ += flow_[w] * arc_cost(e);
        }
    }

    const DiscreteMeasure& mu_;
    const DiscreteMeasure& nu_;
    OTCost kind_;
    int ns_, nt_, root_;
    long n_real_ = 0;
    double big_ = 0.0, tol_ = 0.0, cost_ = 0.0;
    int iterations_ = 0;
    std::vector<int> parent_, depth_;
    std::vector<long> pred_arc_;
    std::vector<double> flow_, pi_;
};

void check_exact_inputs(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.size() > 4096 || nu.size() > 4096)
        throw ConfigError("exact OT solver is guarded to supports <= 4096");
    const double rel = std::abs(mu.total_mass - nu.total_mass) /
                       std::max(mu.total_mass, nu.total_mass);
    if (rel > 1e-9)
        throw ConfigError("exact OT needs equal total masses (relative gap " +
                          std::to_string(rel) + ")");
}

}  // namespace

OTResult exact_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, OTCost cost) {
    check_exact_inputs(mu, nu);
    // Balance the tiny admissible mass gap exactly so the simplex telescopes.
    DiscreteMeasure nu_b = nu;
    const double scale = mu.total_mass / nu.total_mass;
    for (double& w : nu_b.weights) w *= scale;
    nu_b.total_mass = mu.total_mass;

    TransportSimplex simplex(mu, nu_b, cost);
    simplex.solve();

    OTResult res;
    res.squared_cost = simplex.cost_value();
    res.iterations = simplex.iterations();
    res.converged = true;
    res.epsilon = 0.0;

    // Kantorovich duals from node potentials, shifted so the BIG-M offset
    // cancels and <f,mu> = <g,nu> = cost/2.
    const auto& pi = simplex.potentials();
    res.dual_f.resize(mu.size());
    res.dual_g.resize(nu.size());
    for (int i = 0; i < mu.size(); ++i) res.dual_f[i] = pi[i];
    for (int j = 0; j < nu.size(); ++j) res.dual_g[j] = -pi[mu.size() + j];
    double fa = 0.0, ga = 0.0;
    for (int i = 0; i < mu.size(); ++i) fa += res.dual_f[i] * mu.weights[i];
    for (int j = 0; j < nu.size(); ++j) ga += res.dual_g[j] * nu_b.weights[j];
    const double shift = (fa - ga) / (2.0 * mu.total_mass);
    for (double& v : res.dual_f) v -= shift;
    for (double& v : res.dual_g) v += shift;

    if (static_cast<long>(mu.size()) * nu.size() <= (1L << 22)) {
        Eigen::MatrixXd plan = Eigen::MatrixXd::Zero(mu.size(), nu.size());
        const auto& parent = simplex.tree_parent();
        const auto& arcs = simplex.tree_arc();
        const auto& flow = simplex.tree_flow();
        for (size_t w = 0; w + 1 < parent.size(); ++w) {
            const long e = arcs[w];
            if (e >= 0 && simplex.is_real(e) && flow[w] > 0.0)
                plan(simplex.arc_tail(e), simplex.arc_head(e) - mu.size()) = flow[w];
        }
        // Max relative marginal violation of the recovered plan.
        double err = 0.0;
        for (int i = 0; i < mu.size(); ++i)
            err = std::max(err, std::abs(plan.row(i).sum() - mu.weights[i]) /
                                    std::max(mu.weights[i], 1e-300));
        for (int j = 0; j < nu.size(); ++j)
            err = std::max(err, std::abs(plan.col(j).sum() - nu_b.weights[j]) /
                                    std::max(nu_b.weights[j], 1e-300));
        res.marginal_error = err;
        res.plan = std::move(plan);
    }
    return res;
}

OTResult exact_w2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    return exact_ot(mu, nu, OTCost::SquaredEuclidean);
}

double dw1_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    const OTResult r = exact_ot(mu, nu, OTCost::Euclidean);
    return r.squared_cost / std::sqrt(mu.total_mass);
}

// ---------------------------------------------------------------------------
// Log-domain Sinkhorn on general supports.
// Plan convention pi_ij = exp((f_i + g_j - c_ij)/eps) mu_i nu_j with measures
// normalized to probabilities; the reported cost is scaled back by beta.
// ---------------------------------------------------------------------------

namespace {

struct Cloud {
    std::vector<Vec2> pts;
    std::vector<double> w;       // probability weights, all > 0
    std::vector<double> logw;
};

Cloud compress(const DiscreteMeasure& m) {
    Cloud c;
    for (int i = 0; i < m.size(); ++i)
        if (m.weights[i] > 0.0) {
            c.pts.push_back(m.support[i]);
            c.w.push_back(m.weights[i] / m.total_mass);
        }
    if (c.pts.empty()) throw DegenerateFieldError("measure has empty support");
    c.logw.resize(c.w.size());
    for (size_t i = 0; i < c.w.size(); ++i) c.logw[i] = std::log(c.w[i]);
    return c;
}

// out_i = -eps * log sum_j exp((g_j - c_ij)/eps + logw_j)
void softmin(const Cloud& target, const std::vector<double>& g, double eps,
             const Cloud& at, std::vector<double>& out) {
    const size_t n = at.pts.size(), m = target.pts.size();
    out.resize(n);
    std::vector<double> expo(m);
    for (size_t i = 0; i < n; ++i) {
        double mx = -kInf;
        for (size_t j = 0; j < m; ++j) {
            const double c = sq(at.pts[i].x - target.pts[j].x) +
                             sq(at.pts[i].y - target.pts[j].y);
            expo[j] = (g[j] - c) / eps + target.logw[j];
            mx = std::max(mx, expo[j]);
        }
        double s = 0.0;
        for (size_t j = 0; j < m; ++j) s += std::exp(expo[j] - mx);
        out[i] = -eps * (mx + std::log(s));
    }
}

struct PairSolve {
    std::vector<double> f, g;
    double value = 0.0;    // <f,mu> + <g,nu> on probability measures
    int iterations = 0;
    double marginal_error = 0.0;
    bool converged = false;
};

double marginal_violation(const Cloud& a, const Cloud& b, const std::vector<double>& f,
                          const std::vector<double>& g, double eps) {
    // Row marginals of the plan vs a.w, max relative error.
    double err = 0.0;
    std::vector<double> smin;
    softmin(b, g, eps, a, smin);
    for (size_t i = 0; i < a.pts.size(); ++i) {
        const double row = a.w[i] * std::exp((f[i] - smin[i]) / eps);
        err = std::max(err, std::abs(row - a.w[i]) / a.w[i]);
    }
    return err;
}

PairSolve solve_pair(const Cloud& a, const Cloud& b, double eps,
                     const SinkhornOptions& opts) {
    PairSolve r;
    r.f.assign(a.pts.size(), 0.0);
    r.g.assign(b.pts.size(), 0.0);
    std::vector<double> tmp;
    for (int it = 1; it <= opts.max_iter; ++it) {
        softmin(b, r.g, eps, a, r.f);
        softmin(a, r.f, eps, b, tmp);
        double delta = 0.0;
        for (size_t j = 0; j < tmp.size(); ++j)
            delta = std::max(delta, std::abs(tmp[j] - r.g[j]));
        r.g = tmp;
        r.iterations = it;
        if (delta < 0.1 * eps * opts.tol || it == opts.max_iter) {
            r.marginal_error = marginal_violation(a, b, r.f, r.g, eps);
            if (r.marginal_error <= opts.tol) {
                r.converged = true;
                break;
            }
        }
    }
    for (size_t i = 0; i < a.pts.size(); ++i) r.value += r.f[i] * a.w[i];
    for (size_t j = 0; j < b.pts.size(); ++j) r.value += r.g[j] * b.w[j];
    return r;
}

// Symmetric fixed point f = g of OT_eps(a, a); damped halving iteration.
double solve_self(const Cloud& a, double eps, const SinkhornOptions& opts, int& iters) {
    std::vector<double> f(a.pts.size(), 0.0), fn;
    for (int it = 1; it <= opts.max_iter; ++it) {
        softmin(a, f, eps, a, fn);
        double delta = 0.0;
        for (size_t i = 0; i < f.size(); ++i) {
            const double nf = 0.5 * (f[i] + fn[i]);
            delta = std::max(delta, std::abs(nf - f[i]));
            f[i] = nf;
        }
        iters = it;
        if (delta < 0.1 * eps * opts.tol) break;
    }
    double v = 0.0;
    for (size_t i = 0; i < f.size(); ++i) v += 2.0 * f[i] * a.w[i];
    return v;
}

}  // namespace

OTResult sinkhorn_w2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             double epsilon, const SinkhornOptions& opts) {
    if (!(epsilon > 0.0)) throw ConfigError("sinkhorn needs epsilon > 0");
    const double rel = std::abs(mu.total_mass - nu.total_mass) /
                       std::max(mu.total_mass, nu.total_mass);
    if (rel > 1e-9) throw ConfigError("sinkhorn needs equal total masses");

    const Cloud a = compress(mu), b = compress(nu);
    const PairSolve main = solve_pair(a, b, epsilon, opts);

    OTResult res;
    res.epsilon = epsilon;
    res.dual_f = main.f;
    res.dual_g = main.g;
    res.iterations = main.iterations;
    res.marginal_error = main.marginal_error;
    res.converged = main.converged;
    double value = main.value;
    if (opts.debias) {
        int it_a = 0, it_b = 0;
        const double self_a = solve_self(a, epsilon, opts, it_a);
        const double self_b = solve_self(b, epsilon, opts, it_b);
        res.iterations += it_a + it_b;
        value -= 0.5 * (self_a + self_b);
    }
    res.squared_cost = mu.total_mass * value;
    return res;
}

double dw_multi(const DensityField& rho, const DensityField& eta,
                const MultiDistanceOptions& opts) {
    if (!rho.grid.same_as(eta.grid)) throw DimensionError("dw_multi needs a common grid");
    if (rho.species() != eta.species()) throw DimensionError("dw_multi species mismatch");
    for (int i = 0; i < rho.species(); ++i) {
        const double rel = std::abs(rho.target_mass[i] - eta.target_mass[i]) /
                           std::max(rho.target_mass[i], eta.target_mass[i]);
        if (rel > 1e-9) throw ConfigError("dw_multi needs matching target masses");
    }
    const double h = rho.grid.spacing;
    const double eps = opts.epsilon > 0.0
                           ? opts.epsilon
                           : std::max(opts.eps_min, opts.c_eps * h * h);
    double acc = 0.0;
    GridOt* lazy = nullptr;
    GridOt solver_storage(rho.grid, eps);
    for (int i = 0; i < rho.species(); ++i) {
        const DiscreteMeasure a = measure_from_field(rho, i, opts.support_floor);
        const DiscreteMeasure b = measure_from_field(eta, i, opts.support_floor);
        if (a.size() <= opts.exact_below && b.size() <= opts.exact_below) {
            acc += exact_w2_squared(a, b).squared_cost;
            continue;
        }
        if (lazy == nullptr) lazy = &solver_storage;
        const double area = rho.grid.cell_area();
        acc += lazy->debiased_distance_sq(rho.values[i] * area, eta.values[i] * area,
                                          opts.tol, opts.max_iter);
    }
    return acc;
}

}  // namespace pks
