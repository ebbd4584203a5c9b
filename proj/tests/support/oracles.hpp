#pragma once

// Reference models written independently of the simulator sources. Tests compare the
// simulator against these; nothing here calls into the library's own reference helpers.

#include <cstdint>
#include <cstring>
#include <deque>
#include <list>
#include <string>
#include <utility>
#include <vector>

namespace oracle
{
    /// Set-associative LRU cache kept as one recency list per set (front = MRU).
    class RefLru
    {
    public:
        RefLru(std::uint64_t size, std::uint32_t ways, std::uint32_t line = 64)
            : ways_(ways), line_(line), sets_(size / (std::uint64_t{ways} * line)), lists_(sets_)
        {
        }

        /// Returns true on hit. On miss the line is installed and `evicted` receives the victim.
        bool access(std::uint64_t addr, std::uint64_t *evicted = nullptr)
        {
            const std::uint64_t tag = addr / line_;
            auto &lst = lists_[tag % sets_];
            for (auto it = lst.begin(); it != lst.end(); ++it)
            {
                if (*it == tag)
                {
                    lst.erase(it);
                    lst.push_front(tag);
                    return true;
                }
            }
            if (lst.size() == ways_)
            {
                if (evicted != nullptr)
                    *evicted = lst.back() * line_;
                lst.pop_back();
            }
            lst.push_front(tag);
            return false;
        }

    private:
        std::uint32_t ways_;
        std::uint32_t line_;
        std::uint64_t sets_;
        std::vector<std::list<std::uint64_t>> lists_;
    };

    struct Graph
    {
        std::vector<std::uint64_t> offsets;
        std::vector<std::uint32_t> edges;
        std::uint64_t n() const { return offsets.size() - 1; }
    };

    inline constexpr std::uint32_t kInf = 0xFFFFFFFFu;

    inline std::vector<std::uint32_t> bfs(const Graph &g, std::uint32_t source)
    {
        std::vector<std::uint32_t> dist(g.n(), kInf);
        std::deque<std::uint32_t> frontier{source};
        dist[source] = 0;
        while (!frontier.empty())
        {
            const std::uint32_t u = frontier.front();
            frontier.pop_front();
            for (std::uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i)
            {
                if (dist[g.edges[i]] == kInf)
                {
                    dist[g.edges[i]] = dist[u] + 1;
                    frontier.push_back(g.edges[i]);
                }
            }
        }
        return dist;
    }

    /// Power iteration with dangling mass spread uniformly; push-style accumulation in CSR
    /// order so floating-point sums are formed in the same order as a CSR traversal.
    inline std::vector<double> pagerank(const Graph &g, unsigned iterations, double d)
    {
        const std::uint64_t n = g.n();
        const double nd = static_cast<double>(n);
        std::vector<double> rank(n, 1.0 / nd);
        for (unsigned it = 0; it < iterations; ++it)
        {
            std::vector<double> acc(n, 0.0);
            double lost = 0.0;
            for (std::uint64_t u = 0; u < n; ++u)
            {
                const std::uint64_t deg = g.offsets[u + 1] - g.offsets[u];
                if (deg == 0)
                    lost += rank[u];
                else
                    for (std::uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i)
                        acc[g.edges[i]] += rank[u] / static_cast<double>(deg);
            }
            for (std::uint64_t v = 0; v < n; ++v)
                rank[v] = (1.0 - d) / nd + d * (acc[v] + lost / nd);
        }
        return rank;
    }

    inline std::string fnv_hex(const void *data, std::size_t len)
    {
        std::uint64_t h = 14695981039346656037ULL;
        const auto *p = static_cast<const unsigned char *>(data);
        for (std::size_t i = 0; i < len; ++i)
        {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
        static const char *digits = "0123456789abcdef";
        std::string s(16, '0');
        for (int i = 15; i >= 0; --i, h >>= 4)
            s[static_cast<std::size_t>(i)] = digits[h & 0xF];
        return s;
    }

    /// Memory operations a reader issues against the graph (CSR) and against its scratch arrays.
    struct OpCount
    {
        std::uint64_t csr = 0;
        std::uint64_t scratch = 0;
        double csr_fraction() const { return static_cast<double>(csr) / static_cast<double>(csr + scratch); }
    };

    /// BFS: initialise dist (n stores) plus source dist and queue stores; per dequeued vertex a
    /// queue load, a dist load and two offset loads; per scanned edge an edge load and a dist
    /// load; per newly reached vertex a dist store and a queue store.
    inline OpCount bfs_ops(const Graph &g, std::uint32_t source)
    {
        const auto dist = bfs(g, source);
        OpCount c;
        c.scratch = g.n() + 2;
        for (std::uint64_t u = 0; u < g.n(); ++u)
        {
            if (dist[u] == kInf)
                continue;
            const std::uint64_t deg = g.offsets[u + 1] - g.offsets[u];
            c.scratch += 2 + deg;
            c.csr += 2 + deg;
            if (u != source)
                c.scratch += 2;
        }
        return c;
    }

    /// PageRank: rank init (n stores); per iteration next init (n stores), per vertex a rank
    /// load and two offset loads, per edge an edge load plus a next load and store, then a
    /// next load and rank store per vertex.
    inline OpCount pagerank_ops(const Graph &g, unsigned iterations)
    {
        const std::uint64_t n = g.n(), m = g.edges.size();
        OpCount c;
        c.scratch = n + std::uint64_t{iterations} * (n + n + 2 * m + 2 * n);
        c.csr = std::uint64_t{iterations} * (2 * n + m);
        return c;
    }

} // namespace oracle
