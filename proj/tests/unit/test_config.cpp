#include "cxlsim/cli/presets.hpp"
#include "cxlsim/config/config.hpp"
#include "cxlsim/errors.hpp"

#include <doctest.h>

#include <string>

using namespace cxlsim;
using namespace cxlsim::config;

TEST_CASE("a minimal one-node config takes the default node parameters")
{
    const ClusterConfig c = parse_config_text("nodes:\n  - workload: {kind: stream}\n");
    REQUIRE(c.nodes.size() == 1);
    const auto &n = c.nodes[0].node;
    CHECK(n.cores == 8);
    CHECK(n.freq_ghz == 4.0);
    CHECK(n.l1d.size == 32 * 1024);
    CHECK(n.l2.size == 512 * 1024);
    CHECK(n.l3.size == 8 * 1024 * 1024);
    CHECK(n.outstanding_misses == 16);
    CHECK(n.local_channels == 1);
    CHECK(c.device.channels == 4);
    CHECK(c.link.latency_ns == 0.0);
}

TEST_CASE("interleave with a single region is a validation error")
{
    const std::string text = "nodes:\n"
                             "  - pool_bytes: 1MiB\n"
                             "    workload:\n"
                             "      kind: stream\n"
                             "      policy: {kind: interleave, regions: [local]}\n";
    try
    {
        parse_config_text(text);
        FAIL("expected ValidationError");
    }
    catch (const ValidationError &e)
    {
        CHECK(std::string(e.what()).find("interleave requires >= 2 regions") != std::string::npos);
    }
}

TEST_CASE("remote bindings beyond the device capacity are rejected")
{
    const std::string text = "device: {capacity: 1GiB}\n"
                             "nodes:\n"
                             "  - pool_bytes: 768MiB\n"
                             "  - pool_bytes: 512MiB\n";
    CHECK_THROWS_AS(parse_config_text(text), ValidationError);
}

TEST_CASE("malformed YAML, unknown keys and bad values are reported")
{
    CHECK_THROWS_AS(parse_config_text("nodes: [\n"), ParseError);
    CHECK_THROWS_AS(parse_config_text(""), ParseError);
    CHECK_THROWS_AS(parse_config_text("nodes:\n  - node: {cores: 8, turbo: true}\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("link: {latency_ns: -3}\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("nodes:\n  - node: {l1d: {size: 3000}}\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("nodes:\n  - workload: {kind: stream, policy: remote}\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("nodes:\n  - node: {arch_profile: vax}\n"), ValidationError);
}

TEST_CASE("parse, serialize and parse again yields an equal config")
{
    for (const ClusterConfig &c :
         {ClusterConfig{}, cli::stream_cluster(8, fabric::PagePolicy::interleave(), 2 << 20, 64 << 20),
          cli::walker_cluster(fabric::PagePolicy::preferred_local(), 12 << 20, 8 << 20, 64 << 20),
          cli::sharing_cluster(3, workloads::GraphSpec{})})
    {
        const std::string y = serialize_config(c);
        const ClusterConfig back = parse_config_text(y);
        CHECK(back == c);
        CHECK(serialize_config(back) == y);
        CHECK(config_hash(back) == config_hash(c));
    }
}

TEST_CASE("dotted overrides update the config and reject unknown keys")
{
    ClusterConfig c = cli::stream_cluster(2, fabric::PagePolicy::bind_remote(), 1 << 20, 8 << 20);
    apply_override(c, "link.latency_ns=170");
    CHECK(c.link.latency_ns == 170.0);
    apply_override(c, "nodes.*.node.cores=4");
    CHECK(c.nodes[0].node.cores == 4);
    CHECK(c.nodes[1].node.cores == 4);
    apply_override(c, "nodes.1.node.arch_profile=riscv");
    CHECK(c.nodes[1].node.outstanding_misses == 8);
    CHECK(c.nodes[0].node.outstanding_misses == 16);
    CHECK_THROWS_AS(apply_override(c, "link.speed=3"), ValidationError);
    CHECK_THROWS_AS(apply_override(c, "link.latency_ns"), ValidationError);
    CHECK(config_hash(c) != config_hash(cli::stream_cluster(2, fabric::PagePolicy::bind_remote(), 1 << 20, 8 << 20)));
}

TEST_CASE("lookahead defaults to the link's minimum delay")
{
    ClusterConfig c;
    c.link.latency_ns = 250.0;
    CHECK(c.lookahead() == SimTime::from_ns(250.25));
    c.lookahead_ns = 300.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}
