#include <doctest.h>

#include <random>

#include "hicops/pipeline.hpp"
#include "hicops/scheduler.hpp"
#include "hicops/spectra.hpp"
#include "support.hpp"

using namespace hicops;

TEST_SUITE("scheduler") {

TEST_CASE("queue regions") {
    CHECK(queue_region(0) == QueueRegion::W1);
    CHECK(queue_region(4) == QueueRegion::W1);
    CHECK(queue_region(5) == QueueRegion::W2);
    CHECK(queue_region(14) == QueueRegion::W2);
    CHECK(queue_region(15) == QueueRegion::W3);
    CHECK(queue_region(500) == QueueRegion::W3);
}

TEST_CASE("forecast fixed point on a constant series") {
    auto f = forecast(3.5, 0.0, 3.5, 0.4, 0.7);
    CHECK(f.level == doctest::Approx(3.5));
    CHECK(f.trend == doctest::Approx(0.0));
    CHECK(f.t_fct == doctest::Approx(3.5));
}

TEST_CASE("forecast extrapolates a pure trend with alpha=beta=1") {
    Forecast f{0.0, 0.0, 0.0};
    for (double obs : {1.0, 2.0, 3.0}) f = forecast(f.level, f.trend, obs, 1.0, 1.0);
    CHECK(f.t_fct == doctest::Approx(4.0));
}

TEST_CASE("forecast equals the direct recurrence") {
    // Second implementation of the same smoothing recurrences.
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> obs_d(0.0, 2.0);
    const double alpha = 0.3, beta = 0.6;
    double level = 0.7, trend = 0.1;
    double l2 = level, t2 = trend;
    for (int i = 0; i < 500; ++i) {
        const double obs = obs_d(rng);
        auto f = forecast(level, trend, obs, alpha, beta);
        level = f.level;
        trend = f.trend;
        const double nl = alpha * obs + (1 - alpha) * (l2 + t2);
        t2 = beta * (nl - l2) + (1 - beta) * t2;
        l2 = nl;
        CHECK(f.level == doctest::Approx(l2).epsilon(1e-12));
        CHECK(f.trend == doctest::Approx(t2).epsilon(1e-12));
        CHECK(f.t_fct == doctest::Approx(l2 + t2).epsilon(1e-12));
    }
}

TEST_CASE("tick moves a lane from I to R on forecast overrun") {
    auto s = SchedulerState::initial(6, 0.5, 0.5, 0.1, 4.0);
    REQUIRE(s.lanes_i > 1);
    s.t_cum = 4.5;  // already accumulated past the budget
    auto move = schedule_tick(s, QueueRegion::W2, false, false, 0.2);
    CHECK(move == LaneMove::IToR);
    CHECK(s.t_cum == 0.0);
    CHECK(s.lanes_conserved());
}

TEST_CASE("tick moves a lane from R to I in the deep region") {
    auto s = SchedulerState::initial(6, 0.5, 0.5, 0.05, 2.0);
    REQUIRE(s.lanes_r == 2);
    auto move = schedule_tick(s, QueueRegion::W3, false, false, 0.001);
    CHECK(move == LaneMove::RToI);
    CHECK(s.lanes_r == 1);
    CHECK(s.lanes_conserved());
}

TEST_CASE("tick holds steady in the shallow region with one reader") {
    auto s = SchedulerState::initial(6, 0.5, 0.5, 0.05, 2.0);
    s.lanes_r = 1;
    s.lanes_i = s.pool_size - s.lanes_r - s.lanes_k;
    auto move = schedule_tick(s, QueueRegion::W1, false, false, 0.001);
    CHECK(move == LaneMove::None);
    CHECK(s.lanes_r == 1);
    CHECK(s.lanes_conserved());
}

TEST_CASE("tick revives a reader when the shallow region has none") {
    auto s = SchedulerState::initial(6, 0.5, 0.5, 0.05, 2.0);
    s.lanes_i += s.lanes_r;
    s.lanes_r = 0;
    auto move = schedule_tick(s, QueueRegion::W1, false, false, 0.001);
    CHECK(move == LaneMove::IToR);
    CHECK(s.lanes_r == 1);
    CHECK(s.lanes_conserved());
}

TEST_CASE("full queue releases every reader lane") {
    auto s = SchedulerState::initial(8, 0.5, 0.5, 0.05, 2.0);
    REQUIRE(s.lanes_r == 2);
    auto move = schedule_tick(s, QueueRegion::W3, true, false, 0.001);
    CHECK(move == LaneMove::ReleaseAllR);
    CHECK(s.lanes_r == 0);
    CHECK(s.lanes_conserved());
}

TEST_CASE("exhausted data releases every reader lane") {
    auto s = SchedulerState::initial(8, 0.5, 0.5, 0.05, 2.0);
    auto move = schedule_tick(s, QueueRegion::W2, false, true, 0.001);
    CHECK(move == LaneMove::ReleaseAllR);
    CHECK(s.lanes_r == 0);
}

TEST_CASE("lane invariants survive random tick storms") {
    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> wait_d(0.0, 0.3);
    for (int cores : {3, 4, 6, 12}) {
        auto s = SchedulerState::initial(cores, 0.5, 0.5, 0.05, 2.0);
        for (int i = 0; i < 100000; ++i) {
            const auto region = static_cast<QueueRegion>(rng() % 3);
            const bool full = rng() % 23 == 0;
            const bool done = rng() % 37 == 0;
            schedule_tick(s, region, full, done, wait_d(rng));
            REQUIRE(s.lanes_conserved());
            REQUIRE(s.lanes_i >= 1);
            REQUIRE(s.lanes_r >= 0);
            REQUIRE(s.lanes_k == 2);
        }
    }
}

TEST_CASE("reader step state machine over real batch files") {
    const auto dir = testsup::scratch_dir("r_step");
    std::vector<ExperimentalSpectrum> spectra(9);
    for (std::size_t i = 0; i < spectra.size(); ++i) {
        spectra[i].spectrum_id = static_cast<std::uint32_t>(i);
        spectra[i].precursor_mass = 900.0;
        spectra[i].peaks = {{100.0f, 1.0f}};
    }
    auto batches = make_batches(spectra, 1, 3);
    REQUIRE(batches.size() == 3);
    auto wr = write_preprocessed(batches, dir);
    auto index = wr.index;

    BufferQueues queues(2);

    SUBCASE("load, preempt, refill and exhaust") {
        CHECK(subtask_r_step(index, queues, false) == LoadStep::Loaded);
        CHECK(queues.q_f.size() == 1);

        CHECK(subtask_r_step(index, queues, true) == LoadStep::Preempted);
        CHECK(index.reclaim_stack.size() == 1);
        CHECK(queues.q_f.size() == 1);

        CHECK(subtask_r_step(index, queues, false) == LoadStep::Loaded);
        CHECK(subtask_r_step(index, queues, false) == LoadStep::QueueFull);

        // Consumer frees one buffer; the preempted descriptor reloads.
        auto buf = queues.q_f.try_pop();
        REQUIRE(buf.has_value());
        (*buf)->batch = SpectrumBatch{};
        queues.q_r.push(std::move(*buf));
        CHECK(subtask_r_step(index, queues, false) == LoadStep::Loaded);
        CHECK(index.exhausted());

        auto b2 = queues.q_f.try_pop();
        REQUIRE(b2.has_value());
        queues.q_r.push(std::move(*b2));
        CHECK(subtask_r_step(index, queues, false) == LoadStep::Exhausted);
    }

    SUBCASE("yields when no batch buffer is free") {
        auto b1 = queues.q_r.try_pop();
        auto b2 = queues.q_r.try_pop();
        REQUIRE(b1.has_value());
        REQUIRE(b2.has_value());
        CHECK(subtask_r_step(index, queues, false) == LoadStep::Yielded);
        CHECK(index.reclaim_stack.size() == 1);
        CHECK(index.pending.size() == 2);
    }

    SUBCASE("loaded batches round trip through the queue") {
        REQUIRE(subtask_r_step(index, queues, false) == LoadStep::Loaded);
        auto buf = queues.q_f.try_pop();
        REQUIRE(buf.has_value());
        CHECK((*buf)->batch.tag == 0);
        REQUIRE((*buf)->batch.spectra.size() == 3);
        CHECK((*buf)->batch.spectra[0].spectrum_id == 0);
        CHECK((*buf)->descriptor.count == 3);
    }
}

}  // TEST_SUITE
