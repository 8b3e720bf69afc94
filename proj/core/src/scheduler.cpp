#include "hicops/scheduler.hpp"

#include <algorithm>

namespace hicops {

QueueRegion queue_region(int qf_len) {
    if (qf_len < 5) return QueueRegion::W1;
    if (qf_len < 15) return QueueRegion::W2;
    return QueueRegion::W3;
}

Forecast forecast(double level, double trend, double observation, double alpha,
                  double beta) {
    Forecast f;
    f.level = alpha * observation + (1.0 - alpha) * (level + trend);
    f.trend = beta * (f.level - level) + (1.0 - beta) * trend;
    f.t_fct = f.level + f.trend;
    return f;
}

SchedulerState SchedulerState::initial(int cores, double alpha, double beta,
                                       double t_min, double t_max) {
    SchedulerState s;
    cores = std::max(cores, 3);
    s.pool_size = cores + 2;
    s.lanes_k = 2;
    s.lanes_r = 2;
    s.lanes_i = s.pool_size - s.lanes_r - s.lanes_k;
    s.alpha = alpha;
    s.beta = beta;
    s.t_min = t_min;
    s.t_max = t_max;
    return s;
}

LaneMove schedule_tick(SchedulerState& s, QueueRegion region, bool qf_full,
                       bool data_exhausted, double t_wait) {
    s.t_wait = t_wait;
    if (!s.forecast_primed) {
        s.level = t_wait;
        s.trend = 0.0;
        s.t_fct = t_wait;
        s.forecast_primed = true;
    } else {
        auto f = forecast(s.level, s.trend, t_wait, s.alpha, s.beta);
        s.level = f.level;
        s.trend = f.trend;
        s.t_fct = f.t_fct;
    }
    s.t_cum += t_wait;

    if ((qf_full || data_exhausted) && s.lanes_r > 0) {
        s.lanes_i += s.lanes_r;
        s.lanes_r = 0;
        return LaneMove::ReleaseAllR;
    }
    const bool to_r = (t_wait >= s.t_min && s.t_cum + s.t_fct > s.t_max) ||
                      (region == QueueRegion::W1 && s.lanes_r == 0);
    if (to_r && !data_exhausted && s.lanes_i > 1) {
        --s.lanes_i;
        ++s.lanes_r;
        s.t_cum = 0.0;
        return LaneMove::IToR;
    }
    const bool to_i = (region == QueueRegion::W3 && s.lanes_r > 1) || qf_full;
    if (to_i && s.lanes_r > 0) {
        --s.lanes_r;
        ++s.lanes_i;
        return LaneMove::RToI;
    }
    return LaneMove::None;
}

}  // namespace hicops
