#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "pnft/fgsynth.hpp"
#include "pnft/io.hpp"

using namespace pnft;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "pnft_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct Run {
    int code = -1;
    std::string err;
};

Run cli(const std::string& args) {
    const fs::path err = workdir() / "stderr.txt";
    const std::string cmd = std::string(PNFT_BINARY) + " " + args + " > /dev/null 2> " + err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = io::read_text(err.string());
    return r;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

std::vector<std::vector<std::string>> read_csv(const std::string& file, std::string* header) {
    std::ifstream in(file);
    std::string line;
    std::getline(in, line);
    if (header) *header = line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

// Two-symbol table designed once for the whole suite.
const std::string& constellation() {
    static const std::string file = [] {
        const auto seeds = fgsynth::default_seeds();
        std::ofstream out(path("seeds.txt"));
        for (std::size_t s = 0; s < 2; ++s) {
            for (auto z : seeds[s].points()) out << z.real() << ',' << z.imag() << ' ';
            out << '\n';
        }
        out.close();
        const Run r = cli("--out-dir " + workdir().string() + " design --seeds " + path("seeds.txt") + " --out c2.json");
        REQUIRE(r.code == 0);
        return path("c2.json");
    }();
    return file;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(cli("").code == 2);
    CHECK(cli("frobnicate").code == 2);
    CHECK(cli("demod --in " + path("absent.pnftw") + " --constellation " + path("absent.json")).code == 2);
    CHECK(cli("reach-sweep --constellation " + constellation() + " --symbols 100").code == 2);
    CHECK(cli("ber-sweep --constellation " + constellation() + " --max-km 75 --symbols 10").code == 2);
    CHECK(cli("spectrum-cloud --in " + path("absent.pnftw") + " --constellation " + path("nope.json")).code == 2);
}

TEST_CASE("malformed seed file names the line") {
    std::ofstream(path("bad_seeds.txt")) << "0,1 0.2,0.4 -0.2,0.4\n0,1 oops\n";
    const Run r = cli("--out-dir " + workdir().string() + " design --seeds " + path("bad_seeds.txt"));
    CHECK(r.code == 2);
    CHECK(r.err.find("bad_seeds.txt:2") != std::string::npos);
}

TEST_CASE("design writes one symbol per seed") {
    const auto c = io::load_constellation(constellation());
    CHECK(c.symbols.size() == 2);
    CHECK(c.bits_per_symbol() == 1);
}

TEST_CASE("ber sweep table") {
    const std::string args = "ber-sweep --constellation " + constellation() + " --distances 0 75 --cp 0 0.5 --symbols 100";
    REQUIRE(cli("--out-dir " + path("s1") + " --threads 2 " + args).code == 0);
    REQUIRE(cli("--out-dir " + path("s2") + " " + args).code == 0);
    const std::string a = io::read_text(path("s1/ber.csv"));
    CHECK(a == io::read_text(path("s2/ber.csv")));

    std::string header;
    const auto rows = read_csv(path("s1/ber.csv"), &header);
    CHECK(header == "# pnft-csv ber v1");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"distance_km", "cp_fraction", "ber", "n_errors", "n_bits"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == 5);
        if (rows[i][0] == "0") CHECK(rows[i][2] == "0");
        CHECK(rows[i][4] == "100");
    }
}

TEST_CASE("reach sweep table") {
    REQUIRE(cli("--out-dir " + path("r") + " reach-sweep --constellation " + constellation() +
                 " --distances 0 75 --cp 0.5 --symbols 100 --thresholds 0.001 0.1")
                .code == 0);
    std::string header;
    const auto rows = read_csv(path("r/reach.csv"), &header);
    CHECK(header == "# pnft-csv reach v1");
    CHECK(rows[0] == io::csv_columns("reach"));
    REQUIRE(rows.size() == 3);
    CHECK(std::stod(rows[2][2]) >= std::stod(rows[1][2]));
}

TEST_CASE("frame round trip through the link") {
    const std::string o = "--out-dir " + path("f") + " ";
    REQUIRE(cli(o + "modulate --constellation " + constellation() + " --symbols 50").code == 0);
    REQUIRE(cli(o + "propagate --in " + path("f/tx.pnftw") + " --km 0").code == 0);
    CHECK(cli(o + "propagate --in " + path("f/tx.pnftw") + " --km 10").code == 2);
    REQUIRE(cli(o + "demod --in " + path("f/rx.pnftw") + " --constellation " + constellation()).code == 0);
    std::ifstream in(path("f/demod.jsonl"));
    int lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    CHECK(lines == 50);

    // The receiver low-pass trades a small deterministic bias for noise
    // rejection; without it a noiseless frame must reproduce the references.
    std::ofstream(path("nofilter.json")) << R"({"plan": {"rx_filter_harmonics": 0}})";
    REQUIRE(cli("--config " + path("nofilter.json") + " " + o + "spectrum-cloud --in " + path("f/rx.pnftw") +
                " --constellation " + constellation())
                .code == 0);
    std::string header;
    const auto rows = read_csv(path("f/cloud.csv"), &header);
    CHECK(header == "# pnft-csv cloud v1");
    CHECK(rows[0] == io::csv_columns("cloud"));
    REQUIRE(rows.size() == 1 + 50 * 3);
    const auto c = io::load_constellation(constellation());
    double worst = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][1] == rows[i][2]);
        const Complex z(std::stod(rows[i][3]), std::stod(rows[i][4]));
        const int s = c.find_label(rows[i][1]);
        REQUIRE(s >= 0);
        double best = 1e300;
        for (auto ref : c.symbols[static_cast<std::size_t>(s)].reference_spectrum.points()) best = std::min(best, std::abs(z - ref));
        worst = std::max(worst, best);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("spacetime of a lossless link") {
    std::ofstream(path("eff.json")) << R"({"link": {"effective_model": true, "noise_on": false, "loss_on": false, "step_km": 0.5}})";
    REQUIRE(cli("--config " + path("eff.json") + " --out-dir " + path("st") + " spacetime --constellation " +
                 constellation() + " --symbol 0 --km 300 --dz 75")
                .code == 0);
    std::string header;
    const auto rows = read_csv(path("st/spacetime.csv"), &header);
    CHECK(header == "# pnft-csv spacetime v1");
    CHECK(rows[0] == io::csv_columns("spacetime"));
    std::map<double, double> energy;
    std::map<double, int> count;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double a = std::stod(rows[i][2]);
        energy[std::stod(rows[i][0])] += a * a;
        ++count[std::stod(rows[i][0])];
    }
    REQUIRE(energy.size() == 5);
    for (const auto& [z, e] : energy) {
        CHECK(std::abs(e - energy.begin()->second) < 1e-6 * energy.begin()->second);
        CHECK(count[z] == 32);
    }
    CHECK(cli("--out-dir " + path("st") + " spacetime --constellation " + constellation() + " --symbol 11 --km 75").code ==
          2);
}
