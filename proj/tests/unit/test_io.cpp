// Copyright 2026 The sdqrng Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sdqrng/io/json_io.hpp"
#include "sdqrng/io/run_config.hpp"
#include "sdqrng/io/timestamps.hpp"
#include "sdqrng/io/trials.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace sdqrng;
using namespace sdqrng::io;

namespace {

BinningConfig binning(Configuration c) {
    BinningConfig b;
    b.config = c;
    return b;
}

std::size_t parse_error_line(const std::string &text, const BinningConfig &b) {
    std::istringstream is(text);
    try {
        parse_timestamps(is, b);
    } catch (const ParseError &e) {
        return e.line();
    }
    return 0;
}

} // namespace

// ------------------------------------------------------------ timestamps --

TEST(Timestamps, WindowsAndChannels) {
    const std::string text = "#version=1\n"
                             "#trials=4\n"
                             "# time_ps,channel\n"
                             "100,0\n"     // trial 0, bin 0
                             "1400,0\n"    // trial 1, bin 1
                             "1450,1\n"    // other channel
                             "1800,0\n"    // trial 1, bin 2
                             "2270,0\n"    // trial 2, between windows
                             "3570,0\n";   // trial 3, gap between bins 1 and 2
    std::istringstream is(text);
    const TimestampScan scan = parse_timestamps(is, binning(Configuration::ConfigI));
    EXPECT_EQ(scan.records, 6u);
    EXPECT_EQ(scan.discarded, 3u);
    EXPECT_EQ(scan.patterns, (std::vector<ClickPattern>{0b001, 0b110, 0, 0}));
    EXPECT_EQ(outcomes_from_patterns(scan.patterns, Configuration::ConfigI), (std::vector<int>{0, 3, 3, 3}));
}

TEST(Timestamps, WriteParseRoundTrip) {
    std::mt19937_64 rng(3);
    for (auto c : {Configuration::ConfigI, Configuration::ConfigII}) {
        const int d = c == Configuration::ConfigI ? 4 : 7;
        std::vector<int> outcomes(500);
        for (auto &b : outcomes)
            b = static_cast<int>(rng() % static_cast<unsigned>(d));
        std::stringstream ss;
        write_timestamps(ss, patterns_for_outcomes(outcomes, c, 3), binning(c));
        const TimestampScan scan = parse_timestamps(ss, binning(c));
        EXPECT_EQ(scan.discarded, 0u);
        EXPECT_EQ(outcomes_from_patterns(scan.patterns, c), outcomes);
    }
}

TEST(Timestamps, ConfigTwoOutcomesMatchOracle) {
    for (ClickPattern p = 0; p < 8; ++p)
        EXPECT_EQ(outcome_from_pattern(p, Configuration::ConfigII, 3), oracle::config2_outcome(p)) << p;
    for (int b = 0; b < 7; ++b)
        EXPECT_EQ(oracle::config2_outcome(pattern_for_outcome(b, Configuration::ConfigII, 3)), b);
    EXPECT_THROW(pattern_for_outcome(7, Configuration::ConfigII, 3), DomainError);
    EXPECT_THROW(pattern_for_outcome(4, Configuration::ConfigI, 3), DomainError);
}

TEST(Timestamps, ConfigOneMultiClickIsInconclusive) {
    EXPECT_EQ(outcome_from_pattern(0b011, Configuration::ConfigI, 3), 3);
    EXPECT_EQ(outcome_from_pattern(0, Configuration::ConfigI, 3), 3);
    EXPECT_EQ(outcome_from_pattern(0b100, Configuration::ConfigI, 3), 2);
}

TEST(Timestamps, MalformedInput) {
    const auto b = binning(Configuration::ConfigI);
    std::istringstream no_version("100,0\n");
    EXPECT_THROW(parse_timestamps(no_version, b), FormatError);
    std::istringstream empty("");
    EXPECT_THROW(parse_timestamps(empty, b), FormatError);
    std::istringstream future("#version=2\n");
    EXPECT_THROW(parse_timestamps(future, b), FormatError);
    std::istringstream decreasing("#version=1\n200,0\n100,0\n");
    EXPECT_THROW(parse_timestamps(decreasing, b), FormatError);

    EXPECT_EQ(parse_error_line("#version=1\n100,0\nabc\n", b), 3u);
    EXPECT_EQ(parse_error_line("#version=1\n\n-5,0\n", b), 3u);
    EXPECT_EQ(parse_error_line("#version=x\n", b), 1u);
}

TEST(Timestamps, BinningValidation) {
    BinningConfig b;
    b.bin_offsets_ps = {0, 200};
    b.bin_width_ps = 250;
    EXPECT_THROW(b.validate(), DomainError); // overlapping
    b.bin_offsets_ps = {0, 900};
    EXPECT_THROW(b.validate(), DomainError); // past the period
    b.bin_offsets_ps = {0, 300, 600, 750};
    b.bin_width_ps = 100;
    b.config = Configuration::ConfigII;
    EXPECT_THROW(b.validate(), DomainError);
    b.config = Configuration::ConfigI;
    EXPECT_NO_THROW(b.validate());
}

// ---------------------------------------------------------------- trials --

TEST(Trials, RoundTrips) {
    const std::vector<TrialRecord> trials{{0, 3}, {2, 1}, {1, 0}};
    std::stringstream ss;
    write_trials(ss, trials);
    const auto back = read_trials(ss);
    ASSERT_EQ(back.size(), trials.size());
    for (std::size_t i = 0; i < trials.size(); ++i) {
        EXPECT_EQ(back[i].x, trials[i].x);
        EXPECT_EQ(back[i].b, trials[i].b);
    }

    std::stringstream in;
    write_inputs(in, {2, 0, 1, 1});
    EXPECT_EQ(read_inputs(in), (std::vector<int>{2, 0, 1, 1}));

    std::stringstream pw;
    write_power_records(pw, {{0, 0.17}, {1, 0.1799999}});
    const auto recs = read_power_records(pw);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[1].x, 1);
    EXPECT_DOUBLE_EQ(recs[1].mean_photons, 0.1799999);
}

TEST(Trials, Errors) {
    std::istringstream no_version("x,b\n0,1\n");
    EXPECT_THROW(read_trials(no_version), FormatError);
    std::istringstream bad_row("#version=1\nx,b\n0,1\n1;2\n");
    try {
        read_trials(bad_row);
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 4u);
    }
    std::istringstream bad_power("#version=1\nx,mean_photons\n0,abc\n");
    EXPECT_THROW(read_power_records(bad_power), ParseError);
    EXPECT_THROW(join_trials({0, 1}, {2}), SizeError);
    const auto joined = join_trials({1, 0}, {2, 3});
    EXPECT_EQ(joined[1].x, 0);
    EXPECT_EQ(joined[1].b, 3);
}

// ------------------------------------------------------------------ json --

TEST(Json, TableRoundTrip) {
    ExperimentParams p;
    p.n_inputs = 3;
    p.mu = 0.18;
    const ProbTable t = config1_table(p);
    const json j = table_to_json(t);
    EXPECT_EQ(j.at("format"), "sdqrng.table");
    const ProbTable back = table_from_json(json::parse(j.dump()));
    EXPECT_EQ((back.matrix() - t.matrix()).cwiseAbs().maxCoeff(), 0.0);
    ASSERT_TRUE(back.params().has_value());
    EXPECT_DOUBLE_EQ(back.params()->mu, 0.18);
    EXPECT_EQ(table_hash(back), table_hash(t));

    json wrong = j;
    wrong["version"] = 2;
    EXPECT_THROW(table_from_json(wrong), FormatError);
    wrong = j;
    wrong["format"] = "sdqrng.certificate";
    EXPECT_THROW(table_from_json(wrong), FormatError);
    wrong = j;
    wrong["d"] = 5;
    EXPECT_THROW(table_from_json(wrong), FormatError);
    wrong = j;
    wrong["p"][1].erase(0);
    EXPECT_THROW(table_from_json(wrong), FormatError);
}

TEST(Json, CertificateRoundTripIsReusable) {
    ExperimentParams p;
    p.n_inputs = 2;
    p.mu = 0.15;
    const ProbTable t = config1_table(p);
    CertifyOptions o;
    o.use_symmetry = false;
    const CertResult r = certify(t, 0.15, OverlapKind::EnergyBound, o);
    ASSERT_TRUE(r.certified());

    CertificateDocument doc{r.certificate.point, 0.15, OverlapKind::EnergyBound, r.delta, table_hash(t),
                            r.p_guess};
    const json j = certificate_to_json(doc);
    const CertificateDocument back = certificate_from_json(json::parse(j.dump()));
    EXPECT_EQ(back.point.nu, doc.point.nu);
    ASSERT_EQ(back.point.h.size(), doc.point.h.size());
    for (std::size_t i = 0; i < doc.point.h.size(); ++i)
        EXPECT_EQ(back.point.h[i], doc.point.h[i]);
    EXPECT_EQ(back.table_hash, doc.table_hash);
    EXPECT_EQ(certificate_hash(j), certificate_hash(certificate_to_json(back)));

    const CertResult again = reuse_certificate(back.point, t, 0.15, OverlapKind::EnergyBound);
    ASSERT_TRUE(again.certified()) << again.message;
    EXPECT_NEAR(again.p_guess, r.p_guess, 1e-12);

    json broken = j;
    broken.erase("nu");
    EXPECT_THROW(certificate_from_json(broken), FormatError);
}

TEST(Json, ProblemRoundTripRebuildsProgram) {
    ExperimentParams p;
    p.n_inputs = 3;
    p.mu = 0.2;
    const ProbTable t = config1_table(p);
    const auto pair = assemble_reduced(build_states(3, 0.6), t);
    const json j = problem_to_json(pair.primal);
    EXPECT_EQ(j.at("normalization_constraints"), pair.primal.normalization_constraint_count());
    const SdpPair back = problem_from_json(json::parse(j.dump()));
    EXPECT_TRUE(back.primal.program().reduced());
    EXPECT_EQ(back.primal.variable_count(), pair.primal.variable_count());
    EXPECT_EQ(back.primal.program().multiplicity(), pair.primal.program().multiplicity());
    EXPECT_NEAR(solve(back.primal, back.dual).value, solve(pair.primal, pair.dual).value, 1e-9);

    json bad = j;
    bad["strategies"][0][0] = 9;
    EXPECT_THROW(problem_from_json(bad), FormatError);
}

TEST(Json, ResultCarriesStatus) {
    CertResult r;
    r.outcome = CertOutcome::Inconsistent;
    r.message = "x";
    const json j = cert_result_to_json(r, "abc");
    EXPECT_EQ(j.at("status"), to_string(CertOutcome::Inconsistent));
    EXPECT_EQ(j.at("h_min"), 0.0);
    EXPECT_EQ(j.at("certificate_hash"), "abc");
    EXPECT_TRUE(j.contains("primal_infeasibility"));
}

// ------------------------------------------------------------ run config --

TEST(RunConfigText, SetApplyAndRoundTrip) {
    RunConfig c;
    std::istringstream is("# comment\n"
                          "version = 1\n"
                          "config = II\n"
                          "mu = 0.16\n"
                          "eps = 1e-4\n"
                          "model = overlap\n"
                          "trials = 5000\n"
                          "bin_offsets_ps = 0, 300, 600\n"
                          "out = /tmp/x\n"
                          "mu = 0.17\n");
    c.apply(is);
    EXPECT_EQ(c.experiment.config, Configuration::ConfigII);
    EXPECT_DOUBLE_EQ(c.experiment.mu, 0.17);
    EXPECT_DOUBLE_EQ(c.experiment.epsilon, 1e-4);
    EXPECT_EQ(c.trials, 5000u);
    EXPECT_EQ(c.out, "/tmp/x");
    EXPECT_NO_THROW(c.validate());

    RunConfig d;
    std::istringstream text(c.to_text());
    d.apply(text);
    EXPECT_EQ(d.to_text(), c.to_text());
    EXPECT_EQ(d.model, c.model);
}

TEST(RunConfigText, Errors) {
    RunConfig c;
    EXPECT_THROW(c.set("colour", "red"), DomainError);
    EXPECT_THROW(c.set("mu", "abc"), DomainError);
    EXPECT_THROW(c.set("trials", "1.5"), DomainError);
    EXPECT_THROW(c.set("config", "III"), DomainError);
    EXPECT_THROW(c.set("version", "2"), FormatError);

    std::istringstream bad("mu = 0.1\nno equals sign\n");
    try {
        c.apply(bad);
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 2u);
    }

    RunConfig v;
    v.mu_lo = 0.5;
    v.mu_hi = 0.1;
    EXPECT_THROW(v.validate(), DomainError);
    v = RunConfig{};
    v.eps_sec = 1.0;
    EXPECT_THROW(v.validate(), DomainError);
}
