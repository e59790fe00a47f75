#include "posewatch/uetd/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

#include "posewatch/io_util.hpp"

namespace posewatch::uetd {

namespace {

constexpr char kMagic[8] = {'P', 'W', 'C', 'K', '0', '0', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw std::runtime_error("checkpoint truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_checkpoint(const std::string& path, const UetdWeights& w) {
    std::string out(kMagic, sizeof(kMagic));

    const std::string cfg = w.config.to_text();
    put_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out += cfg;

    std::uint32_t n_blocks = 0;
    w.visit([&](const std::string&, const Matrix&) { ++n_blocks; });
    put_u32(out, n_blocks);

    w.visit([&](const std::string& name, const Matrix& m) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<std::uint32_t>(m.rows));
        put_u32(out, static_cast<std::uint32_t>(m.cols));
        const std::size_t nbytes = m.size() * sizeof(double);
        const std::size_t at = out.size();
        out.resize(at + nbytes);
        std::memcpy(out.data() + at, m.data.data(), nbytes);
    });

    put_u64(out, fnv1a(out.data() + sizeof(kMagic), out.size() - sizeof(kMagic)));
    write_file_atomic(path, out);
}

UetdWeights load_checkpoint(const std::string& path) {
    const std::string buf = read_file(path);
    if (buf.size() < sizeof(kMagic) + 8 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error(path + ": not a posewatch checkpoint");

    const std::size_t body_end = buf.size() - 8;
    Reader tail{buf, body_end};
    const std::uint64_t stored = tail.u64();
    const std::uint64_t actual = fnv1a(buf.data() + sizeof(kMagic), body_end - sizeof(kMagic));
    if (stored != actual) throw std::runtime_error(path + ": checkpoint checksum mismatch");

    Reader r{buf, sizeof(kMagic)};
    const std::uint32_t cfg_len = r.u32();
    const UetdConfig config = UetdConfig::from_text(r.bytes(cfg_len));
    config.validate();

    UetdWeights w = init_model(config, 0);
    const std::uint32_t n_blocks = r.u32();

    std::uint32_t seen = 0;
    std::string cur_name;
    // Blocks are stored in visit order, so a single pass matches them up.
    struct Block {
        std::string name;
        std::uint32_t rows, cols;
        std::size_t offset;
    };
    std::vector<Block> blocks;
    blocks.reserve(n_blocks);
    for (std::uint32_t i = 0; i < n_blocks; ++i) {
        const std::uint32_t name_len = r.u32();
        Block b;
        b.name = r.bytes(name_len);
        b.rows = r.u32();
        b.cols = r.u32();
        b.offset = r.pos;
        const std::size_t nbytes = static_cast<std::size_t>(b.rows) * b.cols * sizeof(double);
        r.need(nbytes);
        r.pos += nbytes;
        blocks.push_back(std::move(b));
    }
    if (r.pos != body_end) throw std::runtime_error(path + ": trailing bytes in checkpoint");

    w.visit([&](const std::string& name, Matrix& m) {
        if (seen >= blocks.size()) throw std::runtime_error(path + ": checkpoint missing block " + name);
        const Block& b = blocks[seen++];
        if (b.name != name)
            throw std::runtime_error(path + ": unexpected block '" + b.name + "', wanted '" + name + "'");
        if (static_cast<int>(b.rows) != m.rows || static_cast<int>(b.cols) != m.cols)
            throw std::runtime_error(path + ": shape mismatch for block " + name);
        std::memcpy(m.data.data(), buf.data() + b.offset, m.size() * sizeof(double));
    });
    if (seen != blocks.size()) throw std::runtime_error(path + ": extra blocks in checkpoint");
    return w;
}

}  // namespace posewatch::uetd
