// End-to-end tests of the command-line tool.  The binary under test is
// named by the FASTSLOW_CLI environment variable (set by ctest); every run
// writes into its own directory under the system temp path.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* env = std::getenv("FASTSLOW_CLI");
    return env ? env : "./fastslow";
}

/// Fresh output directory for one case.
fs::path work_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "fastslow_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

/// Runs the tool, returns its exit code; quiet = drop the diagnostic stream
/// for cases whose failure is the expected outcome.
int run_cli(const std::string& args, bool quiet = false) {
    std::string cmd = cli_path() + " " + args;
    if (quiet)
        cmd += " 2>/dev/null";
    const int st = std::system(cmd.c_str());
    REQUIRE(st != -1);
    REQUIRE(WIFEXITED(st));
    return WEXITSTATUS(st);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::size_t file_count(const fs::path& dir) {
    if (!fs::exists(dir))
        return 0;
    std::size_t n = 0;
    for (auto it = fs::recursive_directory_iterator(dir);
         it != fs::recursive_directory_iterator(); ++it)
        if (it->is_regular_file())
            ++n;
    return n;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

} // namespace

TEST_CASE("simulate: coexistence-side initial data yields a limit cycle") {
    const fs::path out = work_dir("sim_a");
    const int rc = run_cli("simulate --ic 0.2785,0.1181,0.4164 --h 0.2649 --out " +
                           out.string());
    CHECK(rc == 0);
    const json v = read_json(out / "verdict.json");
    CHECK(v["verdict"] == "limit-cycle");
    CHECK(v["stop_reason"] == "reached-t-final");
    const std::string tr = slurp(out / "trajectory.csv");
    CHECK(first_line(tr) == "t,x,y,z");
}

TEST_CASE("simulate: extinction-side initial data is absorbed by the boundary") {
    const fs::path out = work_dir("sim_b");
    const int rc = run_cli("simulate --ic 0.278,0.1181,0.4165 --h 0.2649 --out " +
                           out.string());
    CHECK(rc == 0);
    const json v = read_json(out / "verdict.json");
    CHECK(v["verdict"] == "boundary-xz");
    CHECK(v["stop_reason"] == "terminal-event");
    REQUIRE(v["events"].size() >= 1);
    CHECK(v["events"].back()["name"] == "y-extinction");
}

TEST_CASE("simulate: a missing config file exits 2 and writes nothing") {
    const fs::path out = work_dir("sim_missing");
    const int rc = run_cli("simulate --config " + (out / "absent.conf").string() +
                               " --out " + out.string(),
                           true);
    CHECK(rc == 2);
    CHECK(file_count(out) == 0);
}

TEST_CASE("simulate: --format restricts emission to one artifact kind") {
    const fs::path out = work_dir("sim_fmt");
    REQUIRE(run_cli("simulate --ic 0.2785,0.1181,0.4164 --format csv --out " +
                    (out / "c").string()) == 0);
    CHECK(fs::exists(out / "c" / "trajectory.csv"));
    CHECK_FALSE(fs::exists(out / "c" / "verdict.json"));
    REQUIRE(run_cli("simulate --ic 0.2785,0.1181,0.4164 --format json --out " +
                    (out / "j").string()) == 0);
    CHECK(fs::exists(out / "j" / "verdict.json"));
    CHECK_FALSE(fs::exists(out / "j" / "trajectory.csv"));
}

TEST_CASE("config file drives a run and flags override its values") {
    const fs::path out = work_dir("config_precedence");
    fs::create_directories(out);
    {
        std::ofstream conf(out / "run.conf");
        conf << "# bistable parameter point\n"
             << "h = 0.2649\n"
             << "ic = 0.2785, 0.1181, 0.4164\n"
             << "tfinal = 500\n";
    }
    REQUIRE(run_cli("simulate --config " + (out / "run.conf").string() + " --out " +
                    (out / "file").string()) == 0);
    CHECK(read_json(out / "file" / "verdict.json")["verdict"] == "limit-cycle");

    // same file, initial condition overridden on the command line
    REQUIRE(run_cli("simulate --config " + (out / "run.conf").string() +
                    " --ic 0.278,0.1181,0.4165 --out " + (out / "flag").string()) == 0);
    CHECK(read_json(out / "flag" / "verdict.json")["verdict"] == "boundary-xz");
}

TEST_CASE("config file: an unknown key exits 2 before any output") {
    const fs::path out = work_dir("config_unknown");
    fs::create_directories(out);
    {
        std::ofstream conf(out / "run.conf");
        conf << "hh = 0.2649\n";
    }
    const int rc = run_cli("simulate --config " + (out / "run.conf").string() +
                               " --ic 0.3,0.1,0.4 --out " + (out / "o").string(),
                           true);
    CHECK(rc == 2);
    CHECK(file_count(out / "o") == 0);
}

TEST_CASE("normalform: default run reproduces the coefficient set, bytes stable") {
    const fs::path out = work_dir("nf_default");
    REQUIRE(run_cli("normalform --out " + (out / "r1").string()) == 0);
    const json j = read_json(out / "r1" / "coefficients.json");
    CHECK(j["omega"].get<double>() == Catch::Approx(0.39938670).epsilon(1e-6));
    CHECK(j["delta"].get<double>() == Catch::Approx(0.25038390).epsilon(1e-6));
    CHECK(j["F13"].get<double>() == Catch::Approx(0.11727931).epsilon(1e-6));
    CHECK(j["F111"].get<double>() == Catch::Approx(-0.86637321).epsilon(1e-6));
    CHECK(j["H3"].get<double>() == Catch::Approx(0.03766803).epsilon(1e-6));
    CHECK(j["H11"].get<double>() == Catch::Approx(-0.16914628).epsilon(1e-6));
    CHECK(j["alpha_slope"].get<double>() == Catch::Approx(-145.826482).epsilon(1e-6));
    CHECK(j["alpha_intercept"].get<double>() == Catch::Approx(38.589318).epsilon(1e-6));
    CHECK(j["h_fsn"].get<double>() == Catch::Approx(0.2656422218).epsilon(1e-8));
    CHECK(j["x_fsn"].get<double>() == Catch::Approx(0.298680).epsilon(1e-5));
    CHECK(j["y_fsn"].get<double>() == Catch::Approx(0.116693).epsilon(1e-5));
    CHECK(j["z_fsn"].get<double>() == Catch::Approx(0.416669).epsilon(1e-5));
    CHECK(j["h_hopf"].get<double>() == Catch::Approx(0.26462490).epsilon(1e-6));
    CHECK(j["lyapunov_bracket"].get<double>() == Catch::Approx(0.093450).epsilon(1e-4));
    CHECK(j["subcritical"].get<bool>());

    REQUIRE(run_cli("normalform --out " + (out / "r2").string()) == 0);
    CHECK(slurp(out / "r1" / "coefficients.json") ==
          slurp(out / "r2" / "coefficients.json"));
}

TEST_CASE("normalform: a bracket without the fold point exits 1, no outputs") {
    const fs::path out = work_dir("nf_notfound");
    const int rc = run_cli("normalform --h-lo 0.2 --h-hi 0.25 --out " +
                               (out / "o").string(),
                           true);
    CHECK(rc == 1);
    CHECK(file_count(out / "o") == 0);
}

TEST_CASE("ews: escape-side normal-form run raises the warning in the band") {
    const fs::path out = work_dir("ews_escape");
    REQUIRE(run_cli("ews --frame uvw --ic 0.452,0.432,0.259 --N 41 --out " +
                    out.string()) == 0);
    const json r = read_json(out / "ews.json");
    CHECK(r["verdict"] == "extinction-warning");
    const int i0 = r["i0"].get<int>();
    CHECK(i0 >= 12);
    CHECK(i0 <= 18);
    const double s_warn = r["warning_time_s"].get<double>();
    CHECK(s_warn >= 25.0);
    CHECK(s_warn <= 32.0);
    CHECK(r["n_intervals"].get<int>() == 36);
    CHECK(first_line(slurp(out / "curve.csv")) == "tau,wbar,wcrit_i0");
}

TEST_CASE("ews: coexistence-side model run stays above every curve") {
    const fs::path out = work_dir("ews_coex");
    REQUIRE(run_cli("ews --ic 0.2785,0.1181,0.4164 --h 0.2649 --out " +
                    out.string()) == 0);
    const json r = read_json(out / "ews.json");
    CHECK(r["verdict"] == "coexistence-minimum");
    CHECK(r["i0"].get<int>() == 0);
    CHECK_FALSE(fs::exists(out / "curve.csv")); // curve only on a warning
}

TEST_CASE("ews: k below the admissible range exits 2, no outputs") {
    const fs::path out = work_dir("ews_badk");
    const int rc = run_cli("ews --frame uvw --ic 0.452,0.432,0.259 --k 3 --out " +
                               (out / "o").string(),
                           true);
    CHECK(rc == 2);
    CHECK(file_count(out / "o") == 0);
}

TEST_CASE("classify: envelope verdict against the integrated attractor") {
    const fs::path out = work_dir("classify_funnel");
    REQUIRE(run_cli("classify --frame uvw --ic 0.452,0.432,0.329 --out " +
                    out.string()) == 0);
    const json j = read_json(out / "classify.json");
    CHECK(j["theorem"]["verdict"] == "limit-cycle");
    CHECK(j["attractor"]["verdict"] == "limit-cycle");
    REQUIRE(j["agree"].is_boolean());
    CHECK(j["agree"].get<bool>());
    CHECK(j["theorem"]["lower"].get<double>() <
          j["theorem"]["wbar_tau1"].get<double>());
    CHECK(j["theorem"]["wbar_tau1"].get<double>() <
          j["theorem"]["upper"].get<double>());
}

TEST_CASE("sweep: default range finds both Hopf points and the exchange") {
    const fs::path out = work_dir("sweep_default");
    REQUIRE(run_cli("sweep --out " + (out / "r1").string()) == 0);
    const json evs = read_json(out / "r1" / "events.json");
    auto has = [&](const std::string& kind, const std::string& branch, double h) {
        for (const auto& e : evs)
            if (e["kind"] == kind && e["branch"] == branch &&
                std::abs(e["h"].get<double>() - h) < 5e-4)
                return true;
        return false;
    };
    CHECK(has("hopf", "coexistence", 0.2646));
    CHECK(has("hopf", "boundary_xz", 0.0613));
    CHECK(has("transcritical", "boundary_xz", 0.3577));
    CHECK(has("transcritical", "coexistence", 0.3577));

    const std::string branch = slurp(out / "r1" / "branch_coexistence.csv");
    CHECK(first_line(branch) == "h,x,y,z,re_lambda1,im_lambda1,re_lambda2,"
                                "im_lambda2,re_lambda3,im_lambda3,stability");
    CHECK(std::count(branch.begin(), branch.end(), '\n') > 100);

    REQUIRE(run_cli("sweep --out " + (out / "r2").string()) == 0);
    CHECK(slurp(out / "r1" / "events.json") == slurp(out / "r2" / "events.json"));
    CHECK(slurp(out / "r1" / "branch_coexistence.csv") ==
          slurp(out / "r2" / "branch_coexistence.csv"));
}

TEST_CASE("sweep: an empty range writes empty outputs and exits 0") {
    const fs::path out = work_dir("sweep_empty");
    REQUIRE(run_cli("sweep --h-min 0.3 --h-max 0.3 --out " + out.string()) == 0);
    const json evs = read_json(out / "events.json");
    CHECK(evs.is_array());
    CHECK(evs.empty());
    const std::string branch = slurp(out / "branch_coexistence.csv");
    CHECK(std::count(branch.begin(), branch.end(), '\n') == 1); // header only
}
