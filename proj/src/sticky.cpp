#include "cuspflow/sticky.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "cuspflow/errors.hpp"
#include "cuspflow/quadrature.hpp"

namespace cuspflow {

ParticleSystem discretize(const std::function<double(double)>& rho_bar,
                          const std::function<double(double)>& w, double a, double b, int N) {
    if (N < 2) throw config_error("sticky discretization needs at least two particles");
    if (!(b > a)) throw config_error("sticky discretization needs a nonempty interval");
    ParticleSystem sys;
    sys.positions.reserve(N);
    sys.masses.reserve(N);
    sys.velocities.reserve(N);
    sys.counts.assign(N, 1);
    double h = (b - a) / N;
    for (int i = 0; i < N; ++i) {
        double lo = a + i * h;
        double hi = (i + 1 == N) ? b : a + (i + 1) * h;
        double mid = 0.5 * (lo + hi);
        double m = integrate(rho_bar, lo, hi, 1e-13);
        if (!(m > 0.0)) throw hypothesis_violation("nonpositive density cell in discretization");
        sys.positions.push_back(mid);
        sys.masses.push_back(m);
        sys.velocities.push_back(w(mid));
    }
    return sys;
}

namespace {

struct Event {
    double t;
    int i, j;
    long vi, vj;
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const { return a.t > b.t; }
};

struct Lagrangian {
    // particle state referenced to its own update time; position is lazy
    std::vector<double> x_ref, t_ref, v, m;
    std::vector<long long> count;
    std::vector<int> prev, next;
    std::vector<long> version;
    std::vector<char> alive;

    double pos_at(int i, double t) const { return x_ref[i] + v[i] * (t - t_ref[i]); }
};

void push_pair_event(const Lagrangian& lag, int i,
                     std::priority_queue<Event, std::vector<Event>, EventLater>& heap,
                     double now) {
    int j = lag.next[i];
    if (i < 0 || j < 0) return;
    double dv = lag.v[i] - lag.v[j];
    if (dv <= 0.0) return;
    double gap = lag.pos_at(j, now) - lag.pos_at(i, now);
    double t = now + std::max(0.0, gap) / dv;
    heap.push(Event{t, i, j, lag.version[i], lag.version[j]});
}

} // namespace

ParticleSystem evolve(ParticleSystem sys, double t_end) {
    if (t_end < sys.time) throw error("sticky evolution cannot run backwards");
    int n = static_cast<int>(sys.positions.size());
    if (sys.counts.size() != sys.positions.size()) sys.counts.assign(n, 1);

    Lagrangian lag;
    lag.x_ref = sys.positions;
    lag.t_ref.assign(n, sys.time);
    lag.v = sys.velocities;
    lag.m = sys.masses;
    lag.count = sys.counts;
    lag.prev.resize(n);
    lag.next.resize(n);
    lag.version.assign(n, 0);
    lag.alive.assign(n, 1);
    for (int i = 0; i < n; ++i) {
        lag.prev[i] = i - 1;
        lag.next[i] = (i + 1 < n) ? i + 1 : -1;
    }

    std::priority_queue<Event, std::vector<Event>, EventLater> heap;
    for (int i = 0; i + 1 < n; ++i) push_pair_event(lag, i, heap, sys.time);

    auto valid = [&](const Event& e) {
        return lag.alive[e.i] && lag.alive[e.j] && lag.version[e.i] == e.vi &&
               lag.version[e.j] == e.vj && lag.next[e.i] == e.j;
    };

    while (!heap.empty()) {
        Event first = heap.top();
        if (!valid(first)) {
            heap.pop();
            continue;
        }
        if (first.t > t_end) break;
        double t_ev = first.t;

        // drain every pair due within the simultaneity window
        std::vector<Event> batch;
        while (!heap.empty() && heap.top().t <= t_ev + 1e-12) {
            Event e = heap.top();
            heap.pop();
            if (valid(e)) batch.push_back(e);
        }

        // adjacent pairs chain into groups; process groups leftmost-first
        std::sort(batch.begin(), batch.end(), [](const Event& a, const Event& b) {
            return a.i < b.i;
        });
        size_t b0 = 0;
        while (b0 < batch.size()) {
            size_t b1 = b0;
            while (b1 + 1 < batch.size() && batch[b1 + 1].i == batch[b1].j) ++b1;

            int head = batch[b0].i;
            double M = 0.0, P = 0.0, MX = 0.0;
            long long cnt = 0;
            int member = head;
            int tail = batch[b1].j;
            for (;;) {
                M += lag.m[member];
                P += lag.m[member] * lag.v[member];
                MX += lag.m[member] * lag.pos_at(member, t_ev);
                cnt += lag.count[member];
                if (member == tail) break;
                member = lag.next[member];
            }
            for (int k = lag.next[head]; k >= 0;) {
                int nk = lag.next[k];
                lag.alive[k] = 0;
                ++lag.version[k];
                if (k == tail) {
                    lag.next[head] = lag.next[tail];
                    if (lag.next[tail] >= 0) lag.prev[lag.next[tail]] = head;
                    break;
                }
                k = nk;
            }
            lag.x_ref[head] = MX / M;
            lag.t_ref[head] = t_ev;
            lag.v[head] = P / M;
            lag.m[head] = M;
            lag.count[head] = cnt;
            ++lag.version[head];

            if (lag.prev[head] >= 0) push_pair_event(lag, lag.prev[head], heap, t_ev);
            push_pair_event(lag, head, heap, t_ev);
            b0 = b1 + 1;
        }
    }

    ParticleSystem out;
    out.time = t_end;
    for (int i = 0; i >= 0; i = lag.next[i]) {
        if (!lag.alive[i]) break;
        out.positions.push_back(lag.pos_at(i, t_end));
        out.masses.push_back(lag.m[i]);
        out.velocities.push_back(lag.v[i]);
        out.counts.push_back(lag.count[i]);
    }
    return out;
}

Cluster heaviest_cluster(const ParticleSystem& sys) {
    if (sys.positions.empty()) throw error("heaviest cluster of an empty system");
    int best = -1;
    bool best_merged = false;
    for (size_t i = 0; i < sys.positions.size(); ++i) {
        bool merged = i < sys.counts.size() && sys.counts[i] > 1;
        if (best < 0 || (merged && !best_merged) ||
            (merged == best_merged && sys.masses[i] > sys.masses[best])) {
            best = static_cast<int>(i);
            best_merged = merged;
        }
    }
    Cluster c;
    c.position = sys.positions[best];
    c.mass = sys.masses[best];
    c.velocity = sys.velocities[best];
    c.count = best < static_cast<int>(sys.counts.size()) ? sys.counts[best] : 1;
    return c;
}

} // namespace cuspflow
