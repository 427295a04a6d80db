// End-to-end checks of the modcodec binary. The binary path arrives through
// the MODCODEC_BIN environment variable (set by CTest).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "modcodec/bitstream.hpp"
#include "modcodec/checkpoint.hpp"
#include "modcodec/metrics.hpp"
#include "support/test_support.hpp"

using namespace modcodec;

namespace {

std::string binary() {
  const char* bin = std::getenv("MODCODEC_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "MODCODEC_BIN must point at the CLI");
  return bin;
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args, const std::string& log) {
  const std::string cmd = binary() + " " + args + " > " + log + " 2>&1";
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(rc);
  r.output = testsup::slurp(log);
  return r;
}

size_t count_lines(const std::string& text) {
  size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

// writes a tiny config reused across subcommands
std::string write_toy_config(const std::string& dir, uint64_t max_steps) {
  const std::string path = dir + "/toy.cfg";
  std::ofstream cfg(path);
  cfg << "nonlinearity=tpm\nstages=1\nhidden_channels=4\nlatent_channels=4\n"
      << "kernel=3\nbatch_size=4\nepochs=1000\nmax_steps=" << max_steps
      << "\ncrop=16\nlambda=0.01\nseed=77\n";
  return path;
}

}  // namespace

TEST_CASE("cli train writes a checkpoint and one CSV row per step") {
  testsup::TempDir tmp("cli_train");
  testsup::write_corpus(tmp.path() + "/data", 8, 24, 24, 3);
  const std::string cfg = write_toy_config(tmp.path(), 50);

  RunResult r = run("train " + tmp.path() + "/data --config " + cfg +
                        " --out " + tmp.path() + "/run",
                    tmp.path() + "/log.txt");
  CHECK(r.exit_code == 0);
  CHECK(std::filesystem::exists(tmp.path() + "/run.ckpt"));
  const std::string csv = testsup::slurp(tmp.path() + "/run_metrics.csv");
  CHECK(count_lines(csv) == 51);  // header + 50 steps
  // the resolved configuration is logged
  CHECK(r.output.find("nonlinearity=tpm") != std::string::npos);
}

TEST_CASE("cli rejects a nonpositive lambda with exit code 2") {
  testsup::TempDir tmp("cli_badcfg");
  testsup::write_corpus(tmp.path() + "/data", 4, 24, 24, 3);
  const std::string cfg = write_toy_config(tmp.path(), 2);
  RunResult r = run("train " + tmp.path() + "/data --config " + cfg +
                        " --lambda -0.5 --out " + tmp.path() + "/run",
                    tmp.path() + "/log.txt");
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli training is seed deterministic byte for byte") {
  testsup::TempDir tmp("cli_det");
  testsup::write_corpus(tmp.path() + "/data", 6, 24, 24, 5);
  const std::string cfg = write_toy_config(tmp.path(), 6);
  RunResult a = run("train " + tmp.path() + "/data --config " + cfg +
                        " --out " + tmp.path() + "/a",
                    tmp.path() + "/la.txt");
  RunResult b = run("train " + tmp.path() + "/data --config " + cfg +
                        " --out " + tmp.path() + "/b",
                    tmp.path() + "/lb.txt");
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(testsup::slurp(tmp.path() + "/a_metrics.csv") ==
        testsup::slurp(tmp.path() + "/b_metrics.csv"));
  CHECK(!testsup::slurp(tmp.path() + "/a_metrics.csv").empty());
}

TEST_CASE("cli encode/decode round trip with checksum binding") {
  testsup::TempDir tmp("cli_codec");
  testsup::write_corpus(tmp.path() + "/data", 4, 24, 24, 7);
  const std::string cfg = write_toy_config(tmp.path(), 2);
  REQUIRE(run("train " + tmp.path() + "/data --config " + cfg + " --out " +
                  tmp.path() + "/model",
              tmp.path() + "/t.txt")
              .exit_code == 0);
  const std::string ckpt = tmp.path() + "/model.ckpt";

  write_ppm(tmp.path() + "/input.ppm", testsup::synth_image(99, 48, 64));

  SUBCASE("decode reproduces the direct reconstruction exactly") {
    RunResult enc = run("encode " + ckpt + " " + tmp.path() +
                            "/input.ppm --out " + tmp.path() + "/img.tsmb",
                        tmp.path() + "/e.txt");
    REQUIRE(enc.exit_code == 0);
    CHECK(enc.output.find("bpp:") != std::string::npos);

    RunResult dec = run("decode " + ckpt + " " + tmp.path() +
                            "/img.tsmb --out " + tmp.path() + "/recon.ppm",
                        tmp.path() + "/d.txt");
    REQUIRE(dec.exit_code == 0);

    // the decoder output must match synthesis of the encoder's own latents
    CodecModel model = model_from_checkpoint(load_checkpoint(ckpt));
    Tensor image = read_ppm(tmp.path() + "/input.ppm");
    EncodeResult direct = encode_image(model, file_checksum(ckpt), image);
    write_ppm(tmp.path() + "/direct.ppm",
              reconstruct_from_latent(model, direct.latent, 48, 64));
    CHECK(testsup::slurp(tmp.path() + "/recon.ppm") ==
          testsup::slurp(tmp.path() + "/direct.ppm"));

    // reported bpp is payload bits over original pixels
    Bitstream bs = read_bitstream(tmp.path() + "/img.tsmb");
    const double bpp =
        static_cast<double>(bs.payload_bytes()) * 8.0 / (48.0 * 64.0);
    char expect[64];
    std::snprintf(expect, sizeof(expect), "bpp: %.6f", bpp);
    CHECK(enc.output.find(expect) != std::string::npos);
  }

  SUBCASE("bitstreams are identical across separate processes") {
    REQUIRE(run("encode " + ckpt + " " + tmp.path() + "/input.ppm --out " +
                    tmp.path() + "/one.tsmb",
                tmp.path() + "/e1.txt")
                .exit_code == 0);
    REQUIRE(run("encode " + ckpt + " " + tmp.path() + "/input.ppm --out " +
                    tmp.path() + "/two.tsmb",
                tmp.path() + "/e2.txt")
                .exit_code == 0);
    CHECK(testsup::slurp(tmp.path() + "/one.tsmb") ==
          testsup::slurp(tmp.path() + "/two.tsmb"));
  }

  SUBCASE("a mismatched model refuses to decode") {
    REQUIRE(run("encode " + ckpt + " " + tmp.path() + "/input.ppm --out " +
                    tmp.path() + "/img.tsmb",
                tmp.path() + "/e.txt")
                .exit_code == 0);
    // train a different model
    const std::string cfg2 = tmp.path() + "/toy2.cfg";
    {
      std::ofstream c(cfg2);
      c << "nonlinearity=tpm\nstages=1\nhidden_channels=4\nlatent_channels=4\n"
        << "kernel=3\nbatch_size=4\nepochs=1000\nmax_steps=2\ncrop=16\n"
        << "lambda=0.01\nseed=78\n";
    }
    REQUIRE(run("train " + tmp.path() + "/data --config " + cfg2 + " --out " +
                    tmp.path() + "/other",
                tmp.path() + "/t2.txt")
                .exit_code == 0);
    RunResult dec = run("decode " + tmp.path() + "/other.ckpt " + tmp.path() +
                            "/img.tsmb --out " + tmp.path() + "/no.ppm",
                        tmp.path() + "/d2.txt");
    CHECK(dec.exit_code == 3);
    CHECK(dec.output.find("checksum") != std::string::npos);
  }
}

TEST_CASE("cli bdrate, energy, eval and plot") {
  testsup::TempDir tmp("cli_tools");
  testsup::write_corpus(tmp.path() + "/data", 4, 24, 24, 11);
  const std::string cfg = write_toy_config(tmp.path(), 2);
  REQUIRE(run("train " + tmp.path() + "/data --config " + cfg + " --out " +
                  tmp.path() + "/model",
              tmp.path() + "/t.txt")
              .exit_code == 0);
  const std::string ckpt = tmp.path() + "/model.ckpt";

  SUBCASE("bdrate of a curve against itself prints 0.00%") {
    std::ofstream(tmp.path() + "/c.csv")
        << "bpp,psnr,msssim\n0.25,30,0.9\n0.5,33,0.95\n1,36,0.97\n";
    RunResult r = run("bdrate " + tmp.path() + "/c.csv " + tmp.path() + "/c.csv",
                      tmp.path() + "/bd.txt");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("0.00%") != std::string::npos);
  }

  SUBCASE("energy rows sum to one") {
    write_ppm(tmp.path() + "/img.ppm", testsup::synth_image(13, 32, 32));
    RunResult r = run("energy " + ckpt + " " + tmp.path() + "/img.ppm --out " +
                          tmp.path() + "/energy.csv",
                      tmp.path() + "/en.txt");
    REQUIRE(r.exit_code == 0);
    std::ifstream csv(tmp.path() + "/energy.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "channel,energy_ratio");
    double sum = 0.0;
    size_t rows = 0;
    while (std::getline(csv, line)) {
      sum += std::stod(line.substr(line.find(',') + 1));
      ++rows;
    }
    CHECK(rows == 4);  // latent channels
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }

  SUBCASE("eval emits an RD row and plot draws one polyline per curve") {
    RunResult ev = run("eval " + ckpt + " " + tmp.path() + "/data --out " +
                           tmp.path() + "/rd.csv",
                       tmp.path() + "/ev.txt");
    REQUIRE(ev.exit_code == 0);
    RdCurve curve = read_rd_csv(tmp.path() + "/rd.csv");
    REQUIRE(curve.points.size() == 1);
    CHECK(curve.points[0].bpp > 0.0);
    CHECK(curve.points[0].psnr > 0.0);

    std::ofstream(tmp.path() + "/c1.csv")
        << "bpp,psnr,msssim\n0.25,30,0.9\n0.5,33,0.95\n";
    std::ofstream(tmp.path() + "/c2.csv")
        << "bpp,psnr,msssim\n0.3,31,0.91\n0.6,34,0.96\n";
    RunResult pl = run("plot " + tmp.path() + "/c1.csv " + tmp.path() +
                           "/c2.csv --out " + tmp.path() + "/rd.svg",
                       tmp.path() + "/pl.txt");
    REQUIRE(pl.exit_code == 0);
    const std::string svg = testsup::slurp(tmp.path() + "/rd.svg");
    size_t polylines = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
      ++polylines;
      pos += 9;
    }
    CHECK(polylines == 2);
    CHECK(svg.find("bpp") != std::string::npos);
    CHECK(svg.find("PSNR (dB)") != std::string::npos);
  }
}
