#include <cmath>
#include <random>

#include "doctest.h"
#include "spincav/errors.hpp"
#include "spincav/relaxation_analysis.hpp"

using namespace spincav;

TEST_SUITE("relaxation-analysis") {
  TEST_CASE("recovery model") {
    RecoveryModel m;
    m.t1 = 10.0;
    m.n0 = 0.2;
    CHECK(m.population(0.0) == 0.2);
    CHECK(m.population(10.0) == doctest::Approx(1.0 - 0.8 * std::exp(-1.0)));
    m.detailed_balance = true;
    m.boltzmann = 0.5;
    CHECK(m.rate() == doctest::Approx(0.15));
    m.t1 = -1.0;
    CHECK_THROWS_AS(m.validate(), InvalidParameter);
  }

  TEST_CASE("schedule validation") {
    ProbeSchedule s = ProbeSchedule::standard(30.0, 1.0, -60.0, 5.0);
    CHECK_NOTHROW(s.validate());
    const std::vector<double> t = s.probe_times();
    REQUIRE(!t.empty());
    CHECK(t.front() >= 0.0);
    ProbeSchedule no_probe = s;
    std::erase_if(no_probe.segments, [](const ScheduleSegment& g) { return g.kind == ScheduleSegment::Kind::Probe; });
    CHECK_THROWS(no_probe.validate());
    ProbeSchedule loud = s;
    for (auto& g : loud.segments)
      if (g.kind == ScheduleSegment::Kind::Probe) g.power_dbm = 0.0;
    CHECK_THROWS(loud.validate());
    CHECK(segment_kind_from_string(to_string(ScheduleSegment::Kind::Wait)) == ScheduleSegment::Kind::Wait);
  }

  TEST_CASE("splitting extraction") {
    std::vector<double> f, db;
    for (int i = 0; i <= 800; ++i) {
      f.push_back(4.98e9 + i * 0.1e6);
      const double a = (f.back() - 5.0e9) / 2e6, b = (f.back() - 5.03e9) / 2e6;
      db.push_back(10.0 * std::log10(1.0 / (1.0 + a * a) + 1.0 / (1.0 + b * b) + 1e-4));
    }
    const Splitting s = extract_splitting(f, db);
    CHECK(s.splitting_hz == doctest::Approx(30e6).epsilon(2e-3));
    std::vector<double> one(db.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double a = (f[i] - 5.0e9) / 2e6;
      one[i] = -10.0 * std::log10(1.0 + a * a);
    }
    CHECK_THROWS_AS(extract_splitting(f, one), PeaksUnresolved);
  }

  TEST_CASE("fit recovers the injected time constant") {
    RecoveryTrace tr;
    for (int i = 1; i <= 40; ++i) {
      tr.times.push_back(0.5 * i);
      tr.splittings.push_back(recovery_curve(0.5 * i, 30e6, 0.0, 7.0));
    }
    const T1Fit fit = fit_t1(tr);
    CHECK(fit.t1 == doctest::Approx(7.0).epsilon(1e-6));
    CHECK(fit.amplitude == doctest::Approx(30e6).epsilon(1e-6));
    CHECK(fit.ci_low <= fit.t1);
    CHECK(fit.ci_high >= fit.t1);
  }

  TEST_CASE("fit confidence interval covers noisy data") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 0.3e6);
    RecoveryTrace tr;
    for (int i = 1; i <= 60; ++i) {
      tr.times.push_back(i);
      tr.splittings.push_back(recovery_curve(i, 30e6, 0.0, 10.0) + n(rng));
    }
    const T1Fit fit = fit_t1(tr);
    CHECK(fit.ci_low < 10.0);
    CHECK(fit.ci_high > 10.0);
    CHECK(fit.ci_high - fit.ci_low < 3.0);
  }

  TEST_CASE("fit rejects degenerate traces") {
    RecoveryTrace tr;
    tr.times = {1.0, 2.0};
    tr.splittings = {1.0, 1.0};
    CHECK_THROWS(fit_t1(tr));
  }

  TEST_CASE("trace csv round trip") {
    RecoveryTrace tr;
    tr.times = {0.5, 1.5};
    tr.splittings = {1.25e6, 2.5e6};
    tr.sigmas = {1e4, 2e4};
    const std::string csv = trace_to_csv(tr);
    CHECK(csv.rfind("t_s,splitting_hz,sigma_hz\n", 0) == 0);
    const RecoveryTrace back = trace_from_csv(csv);
    CHECK(back.times == tr.times);
    CHECK(back.splittings == tr.splittings);
    CHECK_THROWS(trace_from_csv("a,b\n1,2\n"));
  }
}
