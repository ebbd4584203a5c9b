#include "cxlsim/cli/presets.hpp"
#include "cxlsim/errors.hpp"
#include "cxlsim/lifecycle/checkpoint.hpp"
#include "cxlsim/lifecycle/cluster.hpp"
#include "cxlsim/stats/report.hpp"

#include <doctest.h>

#include <sstream>

using namespace cxlsim;
using namespace cxlsim::lifecycle;

namespace
{
    constexpr std::uint64_t KiB = 1024;
    constexpr std::uint64_t MiB = 1024 * KiB;

    std::string csv(const stats::StatSnapshot &s)
    {
        std::ostringstream out;
        stats::write_csv(out, stats::snapshot_rows(s));
        return out.str();
    }

    config::ClusterConfig small_stream(std::size_t nodes, const fabric::PagePolicy &p)
    {
        auto c = cli::stream_cluster(nodes, p, 256 * KiB, 8 * MiB);
        for (auto &n : c.nodes)
            n.workload.stream.kernels = {workloads::StreamKernel::Copy, workloads::StreamKernel::Triad};
        return c;
    }

    workloads::GraphSpec small_graph()
    {
        workloads::GraphSpec g;
        g.vertices = 512;
        g.edges = 4096;
        g.pagerank_iterations = 3;
        return g;
    }
} // namespace

TEST_CASE("checkpoints of the same config and seed are byte-identical and round-trip")
{
    const auto cfg = small_stream(2, fabric::PagePolicy::interleave());
    const std::string a = encode(fast_forward(cfg));
    const std::string b = encode(fast_forward(cfg));
    CHECK(a == b);
    CHECK(encode(decode(a)) == a);
    CHECK(a.rfind("CXLSCKPT", 0) == 0);

    auto other = cfg;
    other.seed = 99;
    other.nodes[0].workload.policy = fabric::PagePolicy::preferred_local(0.5);
    other.nodes[0].node.local_capacity = 16 * MiB;
    CHECK(encode(fast_forward(other)) != a);
}

TEST_CASE("damaged checkpoints are rejected")
{
    const std::string good = encode(fast_forward(small_stream(1, fabric::PagePolicy::bind_remote())));
    std::string bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode(bad_magic), CorruptCheckpoint);

    std::string future = good;
    future[8] = 2;
    CHECK_THROWS_AS(decode(future), VersionMismatch);

    std::string flipped = good;
    flipped[good.size() - 100] = static_cast<char>(flipped[good.size() - 100] ^ 0x5a);
    CHECK_THROWS_AS(decode(flipped), CorruptCheckpoint);

    CHECK_THROWS_AS(decode(good.substr(0, good.size() / 2)), CorruptCheckpoint);
    CHECK_THROWS_AS(decode(""), CorruptCheckpoint);
}

TEST_CASE("restoring with a different topology is a config conflict")
{
    const auto ck = fast_forward(small_stream(2, fabric::PagePolicy::bind_local()));
    CHECK_THROWS_AS(restore(ck, {"nodes.count=3"}), ConfigConflict);
    CHECK_THROWS_AS(restore(ck, {"nodes.0.node.local_capacity=32MiB"}), ConfigConflict);
    CHECK_NOTHROW(restore(ck, {"link.latency_ns=170", "threads=4"}));
}

TEST_CASE("restore under 1 and 4 threads gives identical statistics")
{
    const auto ck = fast_forward(small_stream(3, fabric::PagePolicy::interleave()));
    const auto s1 = restore_and_run(ck, {"threads=1"}, "r");
    const auto s4 = restore_and_run(ck, {"threads=4"}, "r");
    CHECK(csv(s1) == csv(s4));
    CHECK(s4.threads == 4);
}

TEST_CASE("remote-pinned STREAM conserves bytes and computes correct arrays")
{
    const auto ck = fast_forward(small_stream(1, fabric::PagePolicy::bind_remote()));
    const auto s = restore_and_run(ck, {}, "remote");
    const auto &n = s.nodes.at(0);
    CHECK(n.results.at("mismatched_elements") == "0");
    REQUIRE(n.rois.size() == 2);
    for (const auto &r : n.rois)
    {
        CHECK(r.link.bytes == r.remote_controller.bytes());
        CHECK(r.link.bytes == r.xbar_ingress);
        CHECK(r.local_controller.bytes() == 0);
        CHECK(stats::remote_split(r) == 1.0);
    }
    CHECK(s.link_bytes == s.remote_total().bytes());
    CHECK(s.xbar_ingress == s.link_bytes);
}

TEST_CASE("local-pinned STREAM moves no remote bytes")
{
    const auto s = restore_and_run(fast_forward(small_stream(1, fabric::PagePolicy::bind_local())), {}, "local");
    for (const auto &r : s.nodes.at(0).rois)
    {
        CHECK(r.remote_controller.bytes() == 0);
        CHECK(r.link.bytes == 0);
        CHECK(r.local_controller.bytes() > 0);
        CHECK(stats::remote_split(r) == 0.0);
    }
}

TEST_CASE("remote statistics do not depend on the architecture label")
{
    auto arm = small_stream(1, fabric::PagePolicy::bind_remote());
    auto x86 = arm;
    x86.nodes[0].node.arch_profile = "x86";
    const auto a = restore_and_run(fast_forward(arm), {}, "p");
    const auto b = restore_and_run(fast_forward(x86), {}, "p");
    REQUIRE(a.nodes[0].rois.size() == b.nodes[0].rois.size());
    for (std::size_t i = 0; i < a.nodes[0].rois.size(); ++i)
    {
        CHECK(a.nodes[0].rois[i].remote_controller == b.nodes[0].rois[i].remote_controller);
        CHECK(a.nodes[0].rois[i].link == b.nodes[0].rois[i].link);
    }
    CHECK(a.remote_channels == b.remote_channels);
}

TEST_CASE("setup that cannot be satisfied fails as InitFailure")
{
    auto cfg = small_stream(1, fabric::PagePolicy::bind_local());
    cfg.nodes[0].node.local_capacity = 512 * KiB;
    CHECK_THROWS_AS(Cluster{cfg}, InitFailure);
}

TEST_CASE("readers hold read-only maps of the shared graph")
{
    auto cfg = cli::sharing_cluster(2, small_graph());
    Cluster c(cfg);
    c.fast_forward();
    auto &reader = c.node(1);
    REQUIRE(reader.shared_segment);
    const std::uint64_t before = reader.mem->load<std::uint64_t>(kSharedVirtualBase + 8);
    CHECK_THROWS_AS(reader.mem->store<std::uint64_t>(kSharedVirtualBase + 8, 1), ReadOnlyViolation);
    CHECK(reader.mem->load<std::uint64_t>(kSharedVirtualBase + 8) == before);
    CHECK_NOTHROW(c.node(0).mem->store<std::uint64_t>(kSharedVirtualBase + 8, before));
}

TEST_CASE("functional and timing runs agree on the graph readers' results and split")
{
    const auto ck = fast_forward(cli::sharing_cluster(2, small_graph()));
    Cluster functional = restore(ck);
    const auto f = functional.run_remaining(node::Mode::Functional, "f");
    const auto t = restore_and_run(ck, {}, "t");
    for (std::size_t i = 1; i < 3; ++i)
    {
        CHECK(f.nodes[i].results == t.nodes[i].results);
        REQUIRE(f.nodes[i].rois.size() == t.nodes[i].rois.size());
        for (std::size_t k = 0; k < f.nodes[i].rois.size(); ++k)
        {
            CHECK(f.nodes[i].rois[k].local_ops == t.nodes[i].rois[k].local_ops);
            CHECK(f.nodes[i].rois[k].remote_ops == t.nodes[i].rois[k].remote_ops);
        }
    }
}

TEST_CASE("pointer-chase walker reports the same nonzero checksum in functional and timing runs")
{
    const auto ck = fast_forward(cli::walker_cluster(fabric::PagePolicy::preferred_local(), 2 * MiB, 1 * MiB, 8 * MiB));
    Cluster functional = restore(ck);
    const auto f = functional.run_remaining(node::Mode::Functional, "f");
    const auto t = restore_and_run(ck, {}, "t");
    CHECK(f.nodes[0].results.at("checksum") != "0000000000000000");
    CHECK(f.nodes[0].results == t.nodes[0].results);
}
