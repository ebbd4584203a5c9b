#pragma once

#include "cxlsim/stats/snapshot.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace cxlsim::stats
{
    /// One row of the long-format CSV report.
    struct CsvRow
    {
        std::string run_id;
        std::string node;
        std::string component;
        std::string metric;
        std::string roi;
        std::string value;
    };

    inline constexpr const char *kCsvHeader = "run_id,node,component,metric,roi,value";

    /// Shortest round-trip decimal representation; locale independent.
    std::string format_double(double v);

    /// Rows for every deterministic statistic of the snapshot, in a fixed order. Wallclock is
    /// deliberately excluded.
    std::vector<CsvRow> snapshot_rows(const StatSnapshot &snap);

    void write_csv(std::ostream &out, const std::vector<CsvRow> &rows);
    /// Parses a CSV written by write_csv.
    std::vector<CsvRow> read_csv(std::istream &in);

    /// Run summary including the non-deterministic fields (wallclock, thread count).
    nlohmann::json summary_json(const StatSnapshot &snap);

} // namespace cxlsim::stats
