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

// Runs the sdqrng executable as a subprocess.

#include "sdqrng/extraction.hpp"
#include "sdqrng/io/json_io.hpp"
#include "sdqrng/io/trials.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sdqrng;

namespace {

struct CliRun {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path &p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("sdqrng_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    CliRun run(const std::string &args) const {
        const std::string cmd = "cd '" + dir_.string() + "' && '" SDQRNG_CLI_PATH "' " + args + " > stdout.txt 2> stderr.txt";
        const int status = std::system(cmd.c_str());
        CliRun r;
        r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(dir_ / "stdout.txt");
        r.err = slurp(dir_ / "stderr.txt");
        return r;
    }

    fs::path path(const std::string &name) const { return dir_ / name; }

    fs::path dir_;
};

} // namespace

TEST_F(Cli, CertifyPrintsResult) {
    const CliRun r = run("certify --mu 0.18 --n-inputs 3");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j.at("status"), "certified");
    EXPECT_NEAR(j.at("h_min").get<double>(), 0.2529, 5e-4);
    EXPECT_EQ(j.at("format"), "sdqrng.cert_result");
}

TEST_F(Cli, ZeroMeanPhotonNumberCertifiesNothing) {
    const CliRun r = run("certify --mu 0");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j.at("h_min").get<double>(), 0.0);
    EXPECT_EQ(j.at("output_bits_per_1e6_symbols").get<int>(), 0);
}

TEST_F(Cli, BadArgumentsAreUsageErrors) {
    for (const char *args : {"certify --config III", "certify --eta 1.5", "sweep --axis mu --grid 0.3,0.2",
                             "certify --table missing.json"}) {
        const CliRun r = run(args);
        EXPECT_EQ(r.exit_code, 1) << args;
        const json j = json::parse(r.err);
        EXPECT_TRUE(j.at("error").contains("message")) << args;
    }
}

TEST_F(Cli, SimulateThenIngestReproducesTrials) {
    ASSERT_EQ(run("simulate --mu 0.18 --trials 5000 --seed 4 --out t.csv --timestamps-out ts.txt --inputs-out in.txt")
                  .exit_code,
              0);
    const CliRun r = run("ingest --timestamps ts.txt --inputs in.txt --out t2.csv");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    // Data may go to stdout, so run metadata is on stderr.
    EXPECT_EQ(json::parse(r.err).at("trials"), 5000);
    EXPECT_EQ(slurp(path("t.csv")), slurp(path("t2.csv")));
}

TEST_F(Cli, TabulateThenCertifyFromFile) {
    ASSERT_EQ(run("tabulate --config II --mu 0.16 --eps 1e-4 --out table.json").exit_code, 0);
    const CliRun r = run("certify --table table.json --mu 0.16");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_GT(json::parse(r.out).at("h_min").get<double>(), 0.3);
}

TEST_F(Cli, CertificateReuse) {
    const CliRun a = run("certify --mu 0.18 --certificate-out cert.json");
    ASSERT_EQ(a.exit_code, 0) << a.err;
    const double own = json::parse(a.out).at("h_min").get<double>();
    const CliRun b = run("certify --mu 0.18 --certificate-in cert.json");
    ASSERT_EQ(b.exit_code, 0) << b.err;
    EXPECT_NEAR(json::parse(b.out).at("h_min").get<double>(), own, 1e-9);

    // On a lossier table the reused certificate is valid but no tighter than a fresh solve.
    const CliRun c = run("certify --mu 0.18 --eta 0.95 --certificate-in cert.json");
    const CliRun d = run("certify --mu 0.18 --eta 0.95");
    ASSERT_EQ(c.exit_code, 0) << c.err;
    EXPECT_LE(json::parse(c.out).at("h_min").get<double>(), json::parse(d.out).at("h_min").get<double>() + 1e-7);
}

TEST_F(Cli, SweepWritesCsv) {
    const CliRun r = run("sweep --axis mu --grid 0.1,0.2 --out curve.csv");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    std::ifstream f(path("curve.csv"));
    const SweepCurve curve = read_curve_csv(f);
    ASSERT_EQ(curve.points.size(), 2u);
    EXPECT_EQ(curve.axis, "mu");
    EXPECT_GT(curve.points[1].result.h_min, curve.points[0].result.h_min);
}

TEST_F(Cli, ConfigFileOverridesFlags) {
    std::ofstream(path("run.cfg")) << "version = 1\nmu = 0.1\n";
    const CliRun r = run("certify --mu 0.18 --config-file run.cfg");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_DOUBLE_EQ(json::parse(r.out).at("mu").get<double>(), 0.1);
}

TEST_F(Cli, ExtractWritesBitFile) {
    ASSERT_EQ(run("simulate --mu 0.18 --trials 20000 --seed 4 --out t.csv").exit_code, 0);
    const CliRun r = run("extract --trials-file t.csv --h-min 0.25 --eps-sec 1e-6 --out bits.bin");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const json j = json::parse(r.err);
    std::ifstream f(path("bits.bin"), std::ios::binary);
    const BitString bits = read_bit_file(f);
    EXPECT_EQ(bits.size(), j.at("output_bits").get<std::size_t>());
    EXPECT_EQ(bits.size(), output_length(20000, 0.25, 1e-6));

    // Same inputs, same seed: identical output.
    ASSERT_EQ(run("extract --trials-file t.csv --h-min 0.25 --eps-sec 1e-6 --out bits2.bin").exit_code, 0);
    EXPECT_EQ(slurp(path("bits.bin")), slurp(path("bits2.bin")));
}

TEST_F(Cli, PipelineCertifiesSimulatedRun) {
    const CliRun r = run("pipeline --mu 0.18 --trials 1000000 --seed 9 --out run");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const json j = json::parse(slurp(path("run/summary.json")));
    EXPECT_TRUE(j.at("energy_check").at("pass").get<bool>());
    EXPECT_EQ(j.at("certification").at("status"), "certified");
    EXPECT_NEAR(j.at("certification").at("h_min").get<double>(), 0.2529, 0.02);
    std::ifstream f(path("run/output.bits"), std::ios::binary);
    const BitString bits = read_bit_file(f);
    EXPECT_GT(bits.size(), 200'000u);
    EXPECT_EQ(bits.size(), j.at("extraction").at("output_bits").get<std::size_t>());
}

TEST_F(Cli, PipelineFailsClosedOnInconsistentData) {
    ASSERT_EQ(run("simulate --mu 0.4 --trials 200000 --seed 3 --out bright.csv").exit_code, 0);
    const CliRun r = run("pipeline --mu 0.05 --trials-file bright.csv --out run");
    EXPECT_EQ(r.exit_code, 2);
    const json j = json::parse(slurp(path("run/summary.json")));
    EXPECT_NE(j.at("certification").at("status"), "certified");
    EXPECT_EQ(j.at("certification").at("h_min").get<double>(), 0.0);
    std::ifstream f(path("run/output.bits"), std::ios::binary);
    EXPECT_EQ(read_bit_file(f).size(), 0u);
}

TEST_F(Cli, PipelineFailsClosedOnEnergyViolation) {
    std::ofstream(path("power.csv")) << "#version=1\nx,mean_photons\n0,0.17\n1,0.19\n2,0.17\n";
    const CliRun r = run("pipeline --mu 0.18 --trials 20000 --power-file power.csv --out run");
    EXPECT_EQ(r.exit_code, 2);
    const json j = json::parse(slurp(path("run/summary.json")));
    EXPECT_FALSE(j.at("energy_check").at("pass").get<bool>());
    std::ifstream f(path("run/output.bits"), std::ios::binary);
    EXPECT_EQ(read_bit_file(f).size(), 0u);
}
