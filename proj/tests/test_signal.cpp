#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "helpers.hpp"
#include "pentrace/svc.hpp"
#include "pentrace/synth.hpp"

using namespace pentrace;

TEST_CASE("parse_svc accepts a minimal well-formed file") {
  const char* text =
      "3\n"
      "100 200 0 1 270 45 512\n"
      "101 201 5 1 271 44 520\n"
      "102 202 10 0 272 43 0\n";
  const Session s = parse_svc(text);
  REQUIRE(s.samples.size() == 3);
  CHECK(s.samples[0].x == 100.0);
  CHECK(s.samples[0].t == 0.0);
  CHECK(s.samples[1].t == doctest::Approx(0.005));
  CHECK(s.samples[2].pen_status == kPenInAir);
  CHECK(s.samples[2].pressure == 0.0);
}

TEST_CASE("parse_svc reports the offending line for a short row") {
  const char* text =
      "3\n"
      "100 200 0 1 270 45 512\n"
      "101 201 5 1 271 44\n"
      "102 202 10 0 272 43 0\n";
  try {
    parse_svc(text);
    FAIL("expected SvcError");
  } catch (const SvcError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("parse_svc rejects bad inputs with line numbers") {
  CHECK_THROWS_AS(parse_svc(""), SvcError);
  CHECK_THROWS_AS(parse_svc("\n\n"), SvcError);
  // pen status outside {0,1}
  CHECK_THROWS_AS(parse_svc("1\n0 0 0 2 0 0 0\n"), SvcError);
  // non-monotone timestamps
  CHECK_THROWS_AS(parse_svc("2\n0 0 5 1 0 0 1\n0 0 5 1 0 0 1\n"), SvcError);
  // count mismatch
  CHECK_THROWS_AS(parse_svc("2\n0 0 0 1 0 0 1\n"), SvcError);
  // non-integer field
  CHECK_THROWS_AS(parse_svc("1\n0 0 0.5 1 0 0 1\n"), SvcError);
}

TEST_CASE("serialize/parse round-trips a generated session byte-identically") {
  CohortSpec spec;
  spec.n_intact = 1;
  spec.n_dd = 1;
  spec.seed = 7;
  const auto cohort = generate_cohort(spec);
  for (const Session& s : cohort) {
    REQUIRE(s.samples.size() > 1000);
    const std::string text = serialize_svc(s);
    const Session back = parse_svc(text, s.tick_rate);
    REQUIRE(back.samples.size() == s.samples.size());
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
      CHECK(back.samples[i].x == s.samples[i].x);
      CHECK(back.samples[i].y == s.samples[i].y);
      CHECK(back.samples[i].t_ticks == s.samples[i].t_ticks);
      CHECK(back.samples[i].pen_status == s.samples[i].pen_status);
      CHECK(back.samples[i].azimuth == s.samples[i].azimuth);
      CHECK(back.samples[i].tilt == s.samples[i].tilt);
      CHECK(back.samples[i].pressure == s.samples[i].pressure);
    }
    CHECK(serialize_svc(back) == text);
  }
}

TEST_CASE("segment_strokes follows the pen status runs") {
  using test::session_from_pattern;

  SUBCASE("mixed runs") {
    const auto strokes = segment_strokes(session_from_pattern({1, 1, 0, 0, 1}));
    REQUIRE(strokes.size() == 3);
    CHECK(strokes[0].surface == Surface::on_surface);
    CHECK(strokes[0].size() == 2);
    CHECK(strokes[1].surface == Surface::in_air);
    CHECK(strokes[1].size() == 2);
    CHECK(strokes[2].surface == Surface::on_surface);
    CHECK(strokes[2].size() == 1);
  }
  SUBCASE("all on-surface is one stroke") {
    const auto strokes = segment_strokes(session_from_pattern({1, 1, 1, 1}));
    REQUIRE(strokes.size() == 1);
    CHECK(strokes[0].size() == 4);
  }
  SUBCASE("alternating statuses give single-sample strokes") {
    const auto strokes = segment_strokes(session_from_pattern({1, 0, 1, 0, 1}));
    REQUIRE(strokes.size() == 5);
    for (const auto& st : strokes) CHECK(st.size() == 1);
  }
  SUBCASE("empty session gives no strokes") {
    CHECK(segment_strokes(Session{}).empty());
  }
}

TEST_CASE("stroke segmentation partitions and alternates on random sessions") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const Session s = test::random_session(rng);
    const auto strokes = segment_strokes(s);
    std::size_t covered = 0;
    for (std::size_t i = 0; i < strokes.size(); ++i) {
      CHECK(strokes[i].begin == covered);
      covered = strokes[i].end;
      CHECK(strokes[i].index == i);
      if (i > 0) CHECK(strokes[i].surface != strokes[i - 1].surface);
      for (std::size_t j = strokes[i].begin; j < strokes[i].end; ++j) {
        const bool on = s.samples[j].pen_status == kPenOnSurface;
        CHECK((strokes[i].surface == Surface::on_surface) == on);
      }
    }
    CHECK(covered == s.samples.size());

    // on/in-air counts differ by at most one when starting and ending on-surface
    if (!strokes.empty() && strokes.front().surface == Surface::on_surface &&
        strokes.back().surface == Surface::on_surface) {
      std::size_t on = 0, air = 0;
      for (const auto& st : strokes) (st.surface == Surface::on_surface ? on : air)++;
      CHECK(on - air <= 1);
      CHECK(on >= air);
    }
  }
}

TEST_CASE("validate flags invariant violations without mutating input") {
  using test::session_from_pattern;

  SUBCASE("clean session") {
    const Session s = session_from_pattern({1, 1, 0, 1});
    CHECK(validate(s).empty());
  }
  SUBCASE("duplicated timestamp") {
    Session s = session_from_pattern({1, 1, 1});
    s.samples[2].t = s.samples[1].t;
    const auto diags = validate(s);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].code == DiagnosticCode::non_monotone_time);
    CHECK(diags[0].sample_index == 2);
    CHECK(diags[0].severity == Severity::error);
  }
  SUBCASE("pressure while in-air") {
    Session s = session_from_pattern({1, 0, 1});
    s.samples[1].pressure = 12.0;
    const auto diags = validate(s);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].code == DiagnosticCode::pressure_in_air);
    CHECK(diags[0].sample_index == 1);
  }
  SUBCASE("bad pen status") {
    Session s = session_from_pattern({1, 1});
    s.samples[1].pen_status = 3;
    const auto diags = validate(s);
    REQUIRE(!diags.empty());
    CHECK(diags[0].code == DiagnosticCode::bad_pen_status);
  }
  SUBCASE("no on-surface samples") {
    const Session s = session_from_pattern({0, 0, 0});
    const auto diags = validate(s);
    REQUIRE(!diags.empty());
    CHECK(diags.back().code == DiagnosticCode::no_on_surface_samples);
  }
}

TEST_CASE("sidecar carries subject metadata both ways") {
  Session s = test::session_from_pattern({1, 1, 0, 1});
  s.subject_id = "S0042";
  s.sex = Sex::girl;
  s.class_year = 4;
  s.diagnosis = Diagnosis::dysgraphic;
  s.hpsqc = HpsqcScore{5, 6, 7, 18};
  s.units_per_mm = 200.0;

  const std::string sidecar = serialize_sidecar(s);
  Session t = test::session_from_pattern({1, 1, 0, 1});
  apply_sidecar(t, sidecar);
  CHECK(t.subject_id == "S0042");
  CHECK(t.sex == Sex::girl);
  CHECK(t.class_year == 4);
  CHECK(t.diagnosis == Diagnosis::dysgraphic);
  REQUIRE(t.hpsqc.has_value());
  CHECK(t.hpsqc->total == 18);
  CHECK(t.hpsqc->consistent());
  CHECK(t.units_per_mm == 200.0);
}

TEST_CASE("tick_rate scales raw timestamps to seconds") {
  const char* text =
      "2\n"
      "0 0 0 1 270 45 500\n"
      "1 1 1 1 270 45 500\n";
  const Session fast = parse_svc(text, 200.0);  // one tick per sample at 200 Hz
  CHECK(fast.samples[1].t == doctest::Approx(0.005));
  const Session slow = parse_svc(text, 1.0);
  CHECK(slow.samples[1].t == doctest::Approx(1.0));
  CHECK_THROWS_AS(parse_svc(text, 0.0), std::invalid_argument);
}
