#include "cxlsim/lifecycle/checkpoint.hpp"

#include "cxlsim/errors.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <zlib.h>

namespace cxlsim::lifecycle
{
    class CheckpointAccess
    {
    public:
        static Checkpoint capture(const Cluster &c);
        static Cluster restore(const Checkpoint &ckpt, config::ClusterConfig cfg);
    };

    namespace
    {
        constexpr char kMagic[8] = {'C', 'X', 'L', 'S', 'C', 'K', 'P', 'T'};
        constexpr std::uint32_t kNoNode = 0xffffffffu;

        std::uint32_t crc32_of(std::string_view bytes)
        {
            uLong crc = crc32(0L, Z_NULL, 0);
            const auto *p = reinterpret_cast<const Bytef *>(bytes.data());
            std::size_t left = bytes.size();
            while (left > 0)
            {
                const uInt chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
                crc = crc32(crc, p, chunk);
                p += chunk;
                left -= chunk;
            }
            return static_cast<std::uint32_t>(crc);
        }

        class Writer
        {
        public:
            void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
            void u32(std::uint32_t v)
            {
                for (int i = 0; i < 4; ++i)
                    u8(static_cast<std::uint8_t>(v >> (8 * i)));
            }
            void u64(std::uint64_t v)
            {
                for (int i = 0; i < 8; ++i)
                    u8(static_cast<std::uint8_t>(v >> (8 * i)));
            }
            void str(std::string_view s)
            {
                u64(s.size());
                out_.append(s);
            }
            void raw(const void *p, std::size_t n) { out_.append(static_cast<const char *>(p), n); }
            std::string take() { return std::move(out_); }
            std::size_t size() const { return out_.size(); }

        private:
            std::string out_;
        };

        class Reader
        {
        public:
            Reader(std::string_view in, std::string what) : in_(in), what_(std::move(what)) {}

            std::uint8_t u8()
            {
                need(1);
                return static_cast<std::uint8_t>(in_[pos_++]);
            }
            std::uint32_t u32()
            {
                std::uint32_t v = 0;
                for (int i = 0; i < 4; ++i)
                    v |= std::uint32_t{u8()} << (8 * i);
                return v;
            }
            std::uint64_t u64()
            {
                std::uint64_t v = 0;
                for (int i = 0; i < 8; ++i)
                    v |= std::uint64_t{u8()} << (8 * i);
                return v;
            }
            std::string str()
            {
                const std::uint64_t n = u64();
                need(n);
                std::string s(in_.substr(pos_, n));
                pos_ += n;
                return s;
            }
            void raw(void *p, std::size_t n)
            {
                need(n);
                std::memcpy(p, in_.data() + pos_, n);
                pos_ += n;
            }
            std::uint64_t count(std::uint64_t min_item_bytes)
            {
                const std::uint64_t n = u64();
                if (min_item_bytes > 0 && n > (in_.size() - pos_) / min_item_bytes)
                    fail("count exceeds remaining bytes");
                return n;
            }
            bool done() const { return pos_ == in_.size(); }
            [[noreturn]] void fail(const std::string &msg) const
            {
                throw CorruptCheckpoint(what_ + ": " + msg);
            }

        private:
            void need(std::uint64_t n) const
            {
                if (n > in_.size() - pos_)
                    fail("truncated");
            }

            std::string_view in_;
            std::string what_;
            std::size_t pos_ = 0;
        };

        bool is_zero(const fabric::MemoryStore::Page &p)
        {
            for (std::byte b : p)
            {
                if (b != std::byte{0})
                    return false;
            }
            return true;
        }

        void write_image(Writer &w, const PageImage &img)
        {
            w.u64(img.size());
            for (const auto &[idx, page] : img)
            {
                w.u64(idx);
                if (is_zero(page))
                    w.u8(0);
                else
                {
                    w.u8(1);
                    w.raw(page.data(), page.size());
                }
            }
        }

        PageImage read_image(Reader &r)
        {
            PageImage img;
            const std::uint64_t n = r.count(9);
            for (std::uint64_t i = 0; i < n; ++i)
            {
                const std::uint64_t idx = r.u64();
                const std::uint8_t flag = r.u8();
                auto &page = img[idx];
                if (flag == 1)
                    r.raw(page.data(), page.size());
                else if (flag == 0)
                    page.fill(std::byte{0});
                else
                    r.fail("bad page flag");
            }
            return img;
        }

        PageImage image_of(const fabric::MemoryStore &store)
        {
            PageImage img;
            for (std::uint64_t idx : store.page_indices())
                img.emplace(idx, store.page(idx));
            return img;
        }

        void load_image(fabric::MemoryStore &store, const PageImage &img)
        {
            store.clear();
            for (const auto &[idx, page] : img)
            {
                store.materialize(idx * kPageBytes);
                store.page(idx) = page;
            }
        }

        void write_range(Writer &w, const fabric::AddrRange &r)
        {
            w.u64(r.start);
            w.u64(r.end);
        }
        fabric::AddrRange read_range(Reader &r)
        {
            fabric::AddrRange a;
            a.start = r.u64();
            a.end = r.u64();
            return a;
        }

        std::string encode_bindings(const Checkpoint &c)
        {
            Writer w;
            w.u32(c.next_binding_id);
            w.u64(c.bindings.size());
            for (const auto &b : c.bindings)
            {
                w.u32(b.id);
                w.u32(b.host);
                write_range(w, b.hpa);
                write_range(w, b.dpa);
                w.u8(static_cast<std::uint8_t>(b.mode));
                w.u8(static_cast<std::uint8_t>(b.access));
            }
            return w.take();
        }

        void decode_bindings(Reader &r, Checkpoint &c)
        {
            c.next_binding_id = r.u32();
            const std::uint64_t n = r.count(42);
            for (std::uint64_t i = 0; i < n; ++i)
            {
                fabric::Binding b;
                b.id = r.u32();
                b.host = r.u32();
                b.hpa = read_range(r);
                b.dpa = read_range(r);
                const auto mode = r.u8();
                const auto access = r.u8();
                if (mode > 1 || access > 1)
                    r.fail("bad binding mode or access");
                b.mode = static_cast<fabric::BindMode>(mode);
                b.access = static_cast<fabric::Access>(access);
                c.bindings.push_back(b);
            }
        }

        std::string encode_node(const NodeCheckpoint &n)
        {
            Writer w;
            w.u64(n.next_phase);
            w.u64(n.page_map.entries.size());
            for (const auto &[vpage, e] : n.page_map.entries)
            {
                w.u64(vpage);
                w.u8(static_cast<std::uint8_t>(e.region));
                w.u64(e.phys);
                w.u8(static_cast<std::uint8_t>(e.access));
            }
            w.u64(n.page_map.local_next);
            w.u64(n.page_map.virtual_next);
            w.u64(n.page_map.slices.size());
            for (const auto &s : n.page_map.slices)
            {
                write_range(w, s.slice);
                w.u64(s.next);
            }
            w.u64(n.workload_state.size());
            for (auto v : n.workload_state)
                w.u64(v);
            w.str(n.rng_state);
            return w.take();
        }

        void decode_node(Reader &r, NodeCheckpoint &n)
        {
            n.next_phase = r.u64();
            const std::uint64_t entries = r.count(18);
            for (std::uint64_t i = 0; i < entries; ++i)
            {
                const std::uint64_t vpage = r.u64();
                fabric::PageEntry e;
                const auto region = r.u8();
                e.phys = r.u64();
                const auto access = r.u8();
                if (region > 1 || access > 1)
                    r.fail("bad page entry");
                e.region = static_cast<fabric::Region>(region);
                e.access = static_cast<fabric::Access>(access);
                n.page_map.entries.emplace_back(vpage, e);
            }
            n.page_map.local_next = r.u64();
            n.page_map.virtual_next = r.u64();
            const std::uint64_t slices = r.count(24);
            for (std::uint64_t i = 0; i < slices; ++i)
            {
                fabric::PageMap::FrameCursor fc;
                fc.slice = read_range(r);
                fc.next = r.u64();
                n.page_map.slices.push_back(fc);
            }
            const std::uint64_t words = r.count(8);
            for (std::uint64_t i = 0; i < words; ++i)
                n.workload_state.push_back(r.u64());
            n.rng_state = r.str();
        }

        struct Section
        {
            char tag[4];
            std::uint32_t node;
            std::string payload;
        };

        Section section(const char *tag, std::uint32_t node, std::string payload)
        {
            Section s{{tag[0], tag[1], tag[2], tag[3]}, node, std::move(payload)};
            return s;
        }

        constexpr std::size_t kIndexEntryBytes = 4 + 4 + 8 + 8 + 4;
        constexpr std::size_t kHeaderBytes = 8 + 4 + 4;
    } // namespace

    Checkpoint CheckpointAccess::capture(const Cluster &c)
    {
        Checkpoint ck;
        ck.config_yaml = config::serialize_config(c.cfg_);
        ck.time = c.now_;
        ck.bindings = c.fabric_->bindings();
        ck.next_binding_id = c.fabric_->next_id();
        for (const auto &rt : c.nodes_)
        {
            NodeCheckpoint n;
            n.next_phase = rt.next_phase;
            n.page_map = rt.map->state();
            n.workload_state = rt.workload->state();
            std::ostringstream rng;
            rng << rt.rng;
            n.rng_state = rng.str();
            n.local = image_of(*rt.local);
            ck.nodes.push_back(std::move(n));
        }
        ck.device = image_of(*c.device_);
        return ck;
    }

    Cluster CheckpointAccess::restore(const Checkpoint &ck, config::ClusterConfig cfg)
    {
        Cluster c(Cluster::RestoreTag{}, std::move(cfg));
        try
        {
            c.fabric_->restore(ck.bindings, ck.next_binding_id);
        }
        catch (const Error &e)
        {
            throw CorruptCheckpoint(std::string("binding table: ") + e.what());
        }
        load_image(*c.device_, ck.device);
        c.build_nodes(false);
        if (ck.nodes.size() != c.nodes_.size())
            throw CorruptCheckpoint("node section count does not match the configuration");
        for (std::size_t i = 0; i < c.nodes_.size(); ++i)
        {
            NodeRuntime &rt = c.nodes_[i];
            const NodeCheckpoint &n = ck.nodes[i];
            if (n.next_phase > rt.workload->phases().size())
                throw CorruptCheckpoint("node " + std::to_string(i) + ": phase index out of range");
            rt.next_phase = n.next_phase;
            try
            {
                rt.map->restore(n.page_map);
            }
            catch (const Error &e)
            {
                throw CorruptCheckpoint("node " + std::to_string(i) + " page map: " + e.what());
            }
            rt.workload->restore(n.workload_state);
            std::istringstream rng(n.rng_state);
            rng >> rt.rng;
            if (rng.fail())
                throw CorruptCheckpoint("node " + std::to_string(i) + ": bad rng state");
            load_image(*rt.local, n.local);
        }
        c.now_ = ck.time;
        return c;
    }

    Checkpoint capture(const Cluster &cluster) { return CheckpointAccess::capture(cluster); }

    namespace
    {
        void check_topology(const config::ClusterConfig &a, const config::ClusterConfig &b)
        {
            if (a.nodes.size() != b.nodes.size())
                throw ConfigConflict("node count " + std::to_string(b.nodes.size()) + " differs from the checkpoint's " +
                                     std::to_string(a.nodes.size()));
            for (std::size_t i = 0; i < a.nodes.size(); ++i)
            {
                const std::string p = "nodes[" + std::to_string(i) + "]";
                if (a.nodes[i].node.local_capacity != b.nodes[i].node.local_capacity)
                    throw ConfigConflict(p + ".node.local_capacity differs from the checkpoint");
                if (a.nodes[i].pool_bytes != b.nodes[i].pool_bytes)
                    throw ConfigConflict(p + ".pool_bytes differs from the checkpoint");
                if (!(a.nodes[i].workload == b.nodes[i].workload))
                    throw ConfigConflict(p + ".workload differs from the checkpoint");
            }
            if (a.shared != b.shared)
                throw ConfigConflict("shared segments differ from the checkpoint");
            if (a.device.base != b.device.base || a.device.capacity != b.device.capacity)
                throw ConfigConflict("device base/capacity differ from the checkpoint");
        }
    } // namespace

    Cluster restore(const Checkpoint &ckpt, const std::vector<std::string> &overrides)
    {
        if (ckpt.version != kCheckpointVersion)
            throw VersionMismatch("checkpoint version " + std::to_string(ckpt.version) + " is not supported (expected " +
                                  std::to_string(kCheckpointVersion) + ")");
        config::ClusterConfig base;
        try
        {
            base = config::parse_config_text(ckpt.config_yaml, "<checkpoint>");
        }
        catch (const Error &e)
        {
            throw CorruptCheckpoint(std::string("embedded config: ") + e.what());
        }
        config::ClusterConfig cfg = base;
        for (const auto &o : overrides)
            config::apply_override(cfg, o);
        check_topology(base, cfg);
        return CheckpointAccess::restore(ckpt, std::move(cfg));
    }

    std::string encode(const Checkpoint &ckpt)
    {
        std::vector<Section> sections;
        sections.push_back(section("CONF", kNoNode, ckpt.config_yaml));
        {
            Writer w;
            w.u64(ckpt.time.ps());
            sections.push_back(section("TIME", kNoNode, w.take()));
        }
        sections.push_back(section("BIND", kNoNode, encode_bindings(ckpt)));
        for (std::size_t i = 0; i < ckpt.nodes.size(); ++i)
        {
            sections.push_back(section("NODE", static_cast<std::uint32_t>(i), encode_node(ckpt.nodes[i])));
            Writer w;
            write_image(w, ckpt.nodes[i].local);
            sections.push_back(section("LMEM", static_cast<std::uint32_t>(i), w.take()));
        }
        {
            Writer w;
            write_image(w, ckpt.device);
            sections.push_back(section("DMEM", kNoNode, w.take()));
        }

        Writer out;
        out.raw(kMagic, sizeof kMagic);
        out.u32(ckpt.version);
        out.u32(static_cast<std::uint32_t>(sections.size()));
        std::uint64_t offset = kHeaderBytes + kIndexEntryBytes * sections.size();
        for (const auto &s : sections)
        {
            out.raw(s.tag, 4);
            out.u32(s.node);
            out.u64(offset);
            out.u64(s.payload.size());
            out.u32(crc32_of(s.payload));
            offset += s.payload.size();
        }
        for (const auto &s : sections)
            out.raw(s.payload.data(), s.payload.size());
        return out.take();
    }

    Checkpoint decode(std::string_view bytes)
    {
        Reader hdr(bytes, "checkpoint header");
        char magic[8];
        hdr.raw(magic, sizeof magic);
        if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
            throw CorruptCheckpoint("not a checkpoint file (bad magic)");
        Checkpoint ck;
        ck.version = hdr.u32();
        if (ck.version != kCheckpointVersion)
            throw VersionMismatch("checkpoint version " + std::to_string(ck.version) + " is not supported (expected " +
                                  std::to_string(kCheckpointVersion) + ")");
        const std::uint32_t count = hdr.u32();
        if (count > (bytes.size() - kHeaderBytes) / kIndexEntryBytes)
            throw CorruptCheckpoint("section index exceeds file size");

        bool have_conf = false, have_time = false, have_bind = false, have_dmem = false;
        std::vector<bool> have_node, have_lmem;
        for (std::uint32_t i = 0; i < count; ++i)
        {
            char tag[4];
            hdr.raw(tag, 4);
            const std::uint32_t node = hdr.u32();
            const std::uint64_t offset = hdr.u64();
            const std::uint64_t length = hdr.u64();
            const std::uint32_t crc = hdr.u32();
            const std::string name(tag, 4);
            if (offset > bytes.size() || length > bytes.size() - offset)
                throw CorruptCheckpoint("section " + name + " lies outside the file");
            const std::string_view payload = bytes.substr(offset, length);
            if (crc32_of(payload) != crc)
                throw CorruptCheckpoint("section " + name + " checksum mismatch");
            Reader r(payload, "section " + name);
            auto node_slot = [&](std::vector<bool> &have) -> NodeCheckpoint & {
                if (node > 1u << 20)
                    r.fail("node index out of range");
                if (ck.nodes.size() <= node)
                    ck.nodes.resize(node + 1);
                if (have.size() <= node)
                    have.resize(node + 1, false);
                if (have[node])
                    r.fail("duplicate section");
                have[node] = true;
                return ck.nodes[node];
            };
            if (name == "CONF")
            {
                ck.config_yaml = std::string(payload);
                have_conf = true;
                continue;
            }
            if (name == "TIME")
            {
                ck.time = SimTime{r.u64()};
                have_time = true;
            }
            else if (name == "BIND")
            {
                decode_bindings(r, ck);
                have_bind = true;
            }
            else if (name == "NODE")
                decode_node(r, node_slot(have_node));
            else if (name == "LMEM")
                node_slot(have_lmem).local = read_image(r);
            else if (name == "DMEM")
            {
                ck.device = read_image(r);
                have_dmem = true;
            }
            else
                r.fail("unknown section");
            if (!r.done())
                r.fail("trailing bytes");
        }
        if (!have_conf || !have_time || !have_bind || !have_dmem)
            throw CorruptCheckpoint("checkpoint is missing a required section");
        have_node.resize(ck.nodes.size(), false);
        have_lmem.resize(ck.nodes.size(), false);
        for (std::size_t i = 0; i < ck.nodes.size(); ++i)
        {
            if (!have_node[i] || !have_lmem[i])
                throw CorruptCheckpoint("node " + std::to_string(i) + " sections are missing");
        }
        return ck;
    }

    void save(const Checkpoint &ckpt, const std::string &path)
    {
        const std::string bytes = encode(ckpt);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw InvalidArgument("cannot open '" + path + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw InvalidArgument("failed writing '" + path + "'");
    }

    Checkpoint load(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw InvalidArgument("cannot open checkpoint '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return decode(ss.str());
    }

    Checkpoint fast_forward(const config::ClusterConfig &cfg)
    {
        Cluster c(cfg);
        c.fast_forward();
        return capture(c);
    }

    stats::StatSnapshot restore_and_run(const Checkpoint &ckpt, const std::vector<std::string> &overrides,
                                        const std::string &run_id)
    {
        Cluster c = restore(ckpt, overrides);
        return c.run_remaining(node::Mode::Timing, run_id);
    }

} // namespace cxlsim::lifecycle
