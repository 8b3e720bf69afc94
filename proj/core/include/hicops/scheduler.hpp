#ifndef HICOPS_SCHEDULER_HPP
#define HICOPS_SCHEDULER_HPP

namespace hicops {

// q_f occupancy regions.
enum class QueueRegion { W1, W2, W3 };

QueueRegion queue_region(int qf_len);

struct Forecast {
    double level = 0.0;
    double trend = 0.0;
    double t_fct = 0.0;
};

// Double exponential smoothing step:
//   level' = alpha*obs + (1-alpha)*(level+trend)
//   trend' = beta*(level'-level) + (1-beta)*trend
//   t_fct  = level' + trend'
Forecast forecast(double level, double trend, double observation, double alpha,
                  double beta);

enum class LaneMove { None, IToR, RToI, ReleaseAllR };

// Worker-lane accounting for the R/I/K pipeline. lanes_k is fixed at 2;
// lanes_i never drops below 1.
struct SchedulerState {
    int lanes_r = 2;
    int lanes_i = 1;
    int lanes_k = 2;
    int pool_size = 5;  // c + 2
    double t_wait = 0.0;
    double t_cum = 0.0;
    double t_fct = 0.0;
    double level = 0.0;
    double trend = 0.0;
    bool forecast_primed = false;
    double alpha = 0.5;
    double beta = 0.5;
    double t_min = 0.05;
    double t_max = 2.0;

    static SchedulerState initial(int cores, double alpha, double beta,
                                  double t_min, double t_max);
    bool lanes_conserved() const {
        return lanes_r + lanes_i + lanes_k == pool_size;
    }
};

// One scheduling decision, driven from the I side after each q_f pop.
//   I->R iff (t_wait >= t_min and t_cum + t_fct > t_max)
//         or (region == W1 and lanes_r == 0)
//   R->I iff (region == W3 and lanes_r > 1) or q_f full
// All R lanes release when q_f is full or the data is exhausted; t_cum
// resets on I->R.
LaneMove schedule_tick(SchedulerState& s, QueueRegion region, bool qf_full,
                       bool data_exhausted, double t_wait);

}  // namespace hicops

#endif
