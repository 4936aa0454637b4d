#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const fs::path& workdir()
{
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "pmle_cli_test";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args, const std::string& log = "log.txt")
{
    const std::string cmd = std::string("\"") + PMLE_CLI_PATH + "\" " + args + " > \"" +
                            (workdir() / log).string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t lines(const fs::path& p)
{
    const auto text = slurp(p);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

fs::path write_sample(const std::string& name, std::size_t n, double spread, unsigned seed, bool header)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, spread);
    const auto p = workdir() / name;
    std::ofstream out(p);
    if (header) out << "value\n";
    out.precision(17);
    for (std::size_t i = 0; i < n; ++i) out << z(rng) << '\n';
    return p;
}

std::string data_args()
{
    static const auto y = write_sample("y.txt", 40, 1.1, 1, true);
    static const auto e = write_sample("e.txt", 40, 0.5, 2, false);
    return "--data \"" + y.string() + "\" --error-sample \"" + e.string() + "\"";
}

}  // namespace

TEST(Cli, UsageErrors)
{
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("fit " + data_args() + " --error-family normal --error-scale 0.5"), 2);
    EXPECT_NE(slurp(workdir() / "log.txt").find("--error-family"), std::string::npos);
    EXPECT_EQ(run("fit --data \"" + (workdir() / "y.txt").string() + "\""), 2);
    EXPECT_EQ(run("fit " + data_args() + " --lambda 0.1 --cv"), 2);
    EXPECT_EQ(run("fit " + data_args() + " --no-such-flag"), 2);
    EXPECT_EQ(run("simulate --truth nope --error normal --n 30 --c 1 --replicates 1"), 2);
    EXPECT_EQ(run("fit --help"), 0);
}

TEST(Cli, FitRejectsBadInput)
{
    const auto bad = workdir() / "bad.txt";
    std::ofstream(bad) << "1.0\nabc\n";
    EXPECT_EQ(run("fit --data \"" + bad.string() + "\" --error-family normal --error-scale 0.5"), 2);
    EXPECT_EQ(run("fit --data \"" + (workdir() / "missing.txt").string() + "\" --error-family normal --error-scale 0.5"), 2);
}

TEST(Cli, FitIsReproducible)
{
    const auto a = workdir() / "a.json", b = workdir() / "b.json", c = workdir() / "c.json";
    ASSERT_EQ(run("fit " + data_args() + " --seed 5 --n-subsamples 4 --out \"" + a.string() + "\""), 0);
    ASSERT_EQ(run("fit " + data_args() + " --seed 5 --n-subsamples 4 --out \"" + b.string() + "\""), 0);
    ASSERT_EQ(run("--threads 3 fit " + data_args() + " --seed 5 --n-subsamples 4 --out \"" + c.string() + "\""), 0);
    const auto text = slurp(a);
    EXPECT_EQ(text, slurp(b));
    EXPECT_EQ(text, slurp(c));
    EXPECT_NE(text.find("\"support\""), std::string::npos);
    EXPECT_NE(text.find("\"density\""), std::string::npos);
    EXPECT_NE(text.find("\"shrink_history\""), std::string::npos);
}

TEST(Cli, SimulateInline)
{
    const auto out = workdir() / "mise.csv", ise = workdir() / "ise.csv";
    ASSERT_EQ(run("simulate --truth normal --error laplace --n 30 --c 0.5 --replicates 2 --seed 3 --out \"" +
                  out.string() + "\" --ise-out \"" + ise.string() + "\""),
              0);
    EXPECT_EQ(lines(out), 2u);
    EXPECT_EQ(slurp(out).rfind("truth,error,n,C,mise,se,failures\nnormal,laplace,30,0.5,", 0), 0u);
    EXPECT_EQ(lines(ise), 3u);
}

TEST(Cli, SimulateScenarioFile)
{
    const auto cfg = workdir() / "two.cfg", out = workdir() / "two.csv";
    std::ofstream(cfg) << "replicates = 1\n[scenario]\ntruth = normal, mixnormal\nerror = normal\nn = 30\nc = 1\n";
    ASSERT_EQ(run("simulate --scenarios \"" + cfg.string() + "\" --out \"" + out.string() + "\""), 0);
    EXPECT_EQ(lines(out), 3u);
    std::ofstream(cfg) << "[scenario]\ncolour = red\n";
    EXPECT_EQ(run("simulate --scenarios \"" + cfg.string() + "\" --out \"" + out.string() + "\""), 2);
}

TEST(Cli, Validate)
{
    EXPECT_EQ(run("validate --sweep-size 1", "validate.txt"), 0);
    const auto text = slurp(workdir() / "validate.txt");
    for (const char* name : {"kernel_identities", "supnorm_bound", "lipschitz_bound", "convolution_smoothing",
                             "kl_bounds", "logratio_integral", "theorem_constants"})
        EXPECT_NE(text.find(name), std::string::npos) << name;
}
