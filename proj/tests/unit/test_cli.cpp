#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace
{
    namespace fs = std::filesystem;

    int run(const std::string &args)
    {
        const std::string cmd = std::string(CXLSIM_BIN) + " " + args + " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    fs::path scratch()
    {
        const fs::path d = fs::temp_directory_path() / "cxlsim-cli-test";
        fs::create_directories(d);
        return d;
    }

    fs::path write(const std::string &name, const std::string &text)
    {
        const fs::path p = scratch() / name;
        std::ofstream(p) << text;
        return p;
    }
} // namespace

TEST_CASE("exit codes: usage, parse, validation")
{
    CHECK(run("") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("run --preset no-such-preset") == 1);
    CHECK(run("run") == 1);
    CHECK(run("run --config " + write("broken.yaml", "nodes: [\n").string()) == 2);
    CHECK(run("run --config " + write("invalid.yaml", "link: {latency_ns: -1}\n").string()) == 3);
    CHECK(run("--version") == 0);
}

TEST_CASE("ckpt, restore and report round trip through files")
{
    const fs::path cfg = write("tiny.yaml", "nodes:\n"
                                            "  - pool_bytes: 4MiB\n"
                                            "    node: {cores: 2}\n"
                                            "    workload:\n"
                                            "      kind: stream\n"
                                            "      policy: remote\n"
                                            "      stream: {array_bytes: 64KiB, kernels: [Copy]}\n");
    const fs::path ck = scratch() / "tiny.ckpt";
    const fs::path out1 = scratch() / "out1";
    const fs::path out2 = scratch() / "out2";
    CHECK(run("ckpt --config " + cfg.string() + " --ckpt " + ck.string()) == 0);
    CHECK(run("restore --ckpt " + ck.string() + " --out " + out1.string()) == 0);
    CHECK(run("restore --ckpt " + ck.string() + " --threads 2 --out " + out2.string()) == 0);
    REQUIRE(fs::exists(out1 / "report.csv"));
    CHECK(fs::exists(out1 / "summary.json"));
    CHECK(fs::exists(out1 / "manifest.json"));
    auto slurp = [](const fs::path &p) {
        std::ifstream in(p);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    CHECK(slurp(out1 / "report.csv") == slurp(out2 / "report.csv"));
    CHECK(run("report " + (out1 / "report.csv").string()) == 0);

    std::string bytes = slurp(ck);
    bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 1);
    std::ofstream(scratch() / "bad.ckpt", std::ios::binary) << bytes;
    CHECK(run("restore --ckpt " + (scratch() / "bad.ckpt").string() + " --out " + out1.string()) == 4);
}
