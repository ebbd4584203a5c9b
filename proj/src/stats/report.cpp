#include "cxlsim/stats/report.hpp"

#include "cxlsim/errors.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace cxlsim::stats
{
    std::string format_double(double v)
    {
        char buf[64];
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
        if (ec != std::errc())
            return "nan";
        return std::string(buf, p);
    }

    namespace
    {
        class RowSink
        {
        public:
            RowSink(std::vector<CsvRow> &rows, std::string run_id) : rows_(rows), run_id_(std::move(run_id)) {}

            void add(const std::string &node, const std::string &component, const std::string &metric,
                     const std::string &roi, const std::string &value)
            {
                rows_.push_back(CsvRow{run_id_, node, component, metric, roi, value});
            }
            void add(const std::string &node, const std::string &component, const std::string &metric,
                     const std::string &roi, std::uint64_t value)
            {
                add(node, component, metric, roi, std::to_string(value));
            }
            void add_real(const std::string &node, const std::string &component, const std::string &metric,
                          const std::string &roi, double value)
            {
                add(node, component, metric, roi, format_double(value));
            }

        private:
            std::vector<CsvRow> &rows_;
            std::string run_id_;
        };

        void controller_rows(RowSink &s, const std::string &node, const std::string &comp, const std::string &roi,
                             const ControllerMeter &m, SimTime duration)
        {
            s.add(node, comp, "bytes_read", roi, m.bytes_read);
            s.add(node, comp, "bytes_written", roi, m.bytes_written);
            s.add(node, comp, "busy_ps", roi, m.busy_ps);
            s.add(node, comp, "requests", roi, m.requests);
            s.add(node, comp, "row_hits", roi, m.row_hits);
            s.add(node, comp, "row_empty", roi, m.row_empty);
            s.add(node, comp, "row_conflicts", roi, m.row_conflicts);
            if (duration > SimTime::zero())
                s.add_real(node, comp, "bandwidth_gbps", roi, bandwidth(m.bytes(), duration));
        }

        std::string quote(const std::string &v)
        {
            if (v.find_first_of(",\"\n") == std::string::npos)
                return v;
            std::string out = "\"";
            for (char c : v)
            {
                if (c == '"')
                    out += '"';
                out += c;
            }
            return out + "\"";
        }
    } // namespace

    std::vector<CsvRow> snapshot_rows(const StatSnapshot &snap)
    {
        std::vector<CsvRow> rows;
        RowSink s(rows, snap.run_id);
        const std::string all = "all";
        const std::string none = "-";
        const SimTime span = snap.end - snap.start;
        s.add(all, "sim", "start_ps", none, snap.start.ps());
        s.add(all, "sim", "end_ps", none, snap.end.ps());
        s.add(all, "sim", "completed", none, snap.completed ? 1 : 0);
        s.add(all, "link", "bytes", none, snap.link_bytes);
        s.add(all, "xbar", "ingress_bytes", none, snap.xbar_ingress);
        controller_rows(s, all, "remote_mc", none, snap.remote_total(), span);
        for (std::size_t ch = 0; ch < snap.remote_channels.size(); ++ch)
            controller_rows(s, all, "remote_mc.ch" + std::to_string(ch), none, snap.remote_channels[ch], span);

        for (const auto &n : snap.nodes)
        {
            const std::string node = std::to_string(n.host);
            s.add(node, "node", "arch_profile", none, n.arch_profile);
            s.add(node, "node", "workload", none, n.workload);
            s.add(node, "node", "max_outstanding", none, std::uint64_t{n.max_outstanding});
            for (const auto &[k, v] : n.results)
                s.add(node, "workload", k, none, v);
            for (const auto &r : n.rois)
            {
                const std::string &roi = r.label;
                s.add(node, "roi", "begin_ps", roi, r.begin.ps());
                s.add(node, "roi", "end_ps", roi, r.end.ps());
                s.add(node, "roi", "duration_ps", roi, r.duration().ps());
                s.add(node, "roi", "cycles", roi, r.cycles());
                s.add(node, "roi", "retired_ops", roi, r.retired_ops());
                s.add(node, "roi", "local_ops", roi, r.local_ops);
                s.add(node, "roi", "remote_ops", roi, r.remote_ops);
                if (r.memory_ops() > 0)
                    s.add_real(node, "roi", "remote_split", roi, remote_split(r));
                if (r.cycles() > 0)
                    s.add_real(node, "roi", "ipc_proxy", roi, ipc_proxy(r));
                if (r.reported_bytes > 0)
                {
                    s.add(node, "roi", "reported_bytes", roi, r.reported_bytes);
                    if (r.duration() > SimTime::zero())
                        s.add_real(node, "roi", "reported_bandwidth_gbps", roi, bandwidth(r, Where::Reported));
                }
                for (std::size_t c = 0; c < r.core_retired.size(); ++c)
                    s.add(node, "core" + std::to_string(c), "retired_ops", roi, r.core_retired[c]);
                static const char *levels[] = {"l1d", "l2", "l3"};
                for (std::size_t l = 0; l < 3; ++l)
                {
                    s.add(node, levels[l], "hits", roi, r.caches[l].hits);
                    s.add(node, levels[l], "misses", roi, r.caches[l].misses);
                    s.add_real(node, levels[l], "hit_rate", roi, r.caches[l].hit_rate());
                }
                s.add(node, "l2", "prefetches", roi, r.prefetches);
                controller_rows(s, node, "local_mc", roi, r.local_controller, r.duration());
                controller_rows(s, node, "remote_mc", roi, r.remote_controller, r.duration());
                s.add(node, "link", "bytes", roi, r.link.bytes);
                s.add(node, "link", "messages", roi, r.link.messages);
                s.add(node, "link", "credit_stalls", roi, r.link.credit_stalls);
                if (r.duration() > SimTime::zero())
                    s.add_real(node, "link", "bandwidth_gbps", roi, bandwidth(r, Where::Link));
                for (const auto &[inflight, count] : r.link.in_flight)
                    s.add(node, "link", "in_flight_" + std::to_string(inflight), roi, count);
                s.add(node, "link", "egress_bytes", roi, r.link_egress);
                s.add(node, "xbar", "ingress_bytes", roi, r.xbar_ingress);
                const auto &hist = r.miss_latency.counts();
                for (std::size_t b = 0; b < hist.size(); ++b)
                {
                    if (hist[b] != 0)
                        s.add(node, "miss_latency", "bucket_" + std::to_string(b), roi, hist[b]);
                }
                s.add(node, "miss_latency", "samples", roi, r.miss_latency.samples());
                if (r.miss_latency.samples() > 0)
                    s.add_real(node, "miss_latency", "mean_ns", roi,
                               static_cast<double>(r.miss_latency.total_ps()) / 1000.0 /
                                   static_cast<double>(r.miss_latency.samples()));
            }
        }
        return rows;
    }

    void write_csv(std::ostream &out, const std::vector<CsvRow> &rows)
    {
        out << kCsvHeader << '\n';
        for (const auto &r : rows)
        {
            out << quote(r.run_id) << ',' << quote(r.node) << ',' << quote(r.component) << ',' << quote(r.metric) << ','
                << quote(r.roi) << ',' << quote(r.value) << '\n';
        }
    }

    std::vector<CsvRow> read_csv(std::istream &in)
    {
        std::vector<CsvRow> rows;
        std::string line;
        if (!std::getline(in, line) || line != kCsvHeader)
            throw ParseError("report CSV: missing or unexpected header");
        std::size_t lineno = 1;
        while (std::getline(in, line))
        {
            ++lineno;
            if (line.empty())
                continue;
            std::vector<std::string> fields;
            std::string cur;
            bool quoted = false;
            for (std::size_t i = 0; i < line.size(); ++i)
            {
                const char c = line[i];
                if (quoted)
                {
                    if (c == '"' && i + 1 < line.size() && line[i + 1] == '"')
                    {
                        cur += '"';
                        ++i;
                    }
                    else if (c == '"')
                        quoted = false;
                    else
                        cur += c;
                }
                else if (c == '"')
                    quoted = true;
                else if (c == ',')
                {
                    fields.push_back(cur);
                    cur.clear();
                }
                else
                    cur += c;
            }
            fields.push_back(cur);
            if (fields.size() != 6)
                throw ParseError("report CSV line " + std::to_string(lineno) + ": expected 6 fields");
            rows.push_back(CsvRow{fields[0], fields[1], fields[2], fields[3], fields[4], fields[5]});
        }
        return rows;
    }

    nlohmann::json summary_json(const StatSnapshot &snap)
    {
        nlohmann::json j;
        j["run_id"] = snap.run_id;
        j["threads"] = snap.threads;
        j["wallclock_s"] = snap.wallclock_s;
        j["events"] = snap.events;
        j["sim_start_ps"] = snap.start.ps();
        j["sim_end_ps"] = snap.end.ps();
        j["completed"] = snap.completed;
        j["link_bytes"] = snap.link_bytes;
        j["xbar_ingress_bytes"] = snap.xbar_ingress;
        j["remote_controller_bytes"] = snap.remote_total().bytes();
        auto &nodes = j["nodes"] = nlohmann::json::array();
        for (const auto &n : snap.nodes)
        {
            nlohmann::json jn;
            jn["host"] = n.host;
            jn["workload"] = n.workload;
            jn["arch_profile"] = n.arch_profile;
            jn["results"] = n.results;
            auto &rois = jn["rois"] = nlohmann::json::array();
            for (const auto &r : n.rois)
            {
                nlohmann::json jr;
                jr["label"] = r.label;
                jr["duration_ps"] = r.duration().ps();
                jr["retired_ops"] = r.retired_ops();
                if (r.cycles() > 0)
                    jr["ipc_proxy"] = ipc_proxy(r);
                if (r.memory_ops() > 0)
                    jr["remote_split"] = remote_split(r);
                if (r.duration() > SimTime::zero())
                {
                    jr["local_bandwidth_gbps"] = bandwidth(r, Where::LocalController);
                    jr["remote_bandwidth_gbps"] = bandwidth(r, Where::RemoteController);
                    jr["link_bandwidth_gbps"] = bandwidth(r, Where::Link);
                    if (r.reported_bytes > 0)
                        jr["reported_bandwidth_gbps"] = bandwidth(r, Where::Reported);
                }
                rois.push_back(jr);
            }
            nodes.push_back(jn);
        }
        return j;
    }

} // namespace cxlsim::stats
