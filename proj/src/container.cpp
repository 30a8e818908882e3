// SPDX-License-Identifier: Apache-2.0
#include "shflbw/container.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace shflbw {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr char kMagic[4] = {'S', 'M', 'X', '1'};

enum Kind : std::uint32_t {
    kDense = 0,
    kMask = 1,
    kVectorWise = 2,
    kShflBW = 3,
    kBlockWise = 4,
};

struct Writer {
    std::vector<std::uint8_t> out;

    void u32(std::uint32_t v) {
        out.push_back(std::uint8_t(v & 0xff));
        out.push_back(std::uint8_t((v >> 8) & 0xff));
        out.push_back(std::uint8_t((v >> 16) & 0xff));
        out.push_back(std::uint8_t((v >> 24) & 0xff));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f32s(const std::vector<float>& vs) {
        for (float v : vs) f32(v);
    }
};

struct Reader {
    const std::vector<std::uint8_t>& in;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > in.size())
            throw CorruptPayload("container truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = std::uint32_t(in[pos]) |
                          std::uint32_t(in[pos + 1]) << 8 |
                          std::uint32_t(in[pos + 2]) << 16 |
                          std::uint32_t(in[pos + 3]) << 24;
        pos += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::vector<float> f32s(std::size_t n) {
        if (n > (in.size() - pos) / 4)
            throw CorruptPayload("container truncated");
        std::vector<float> vs(n);
        for (auto& v : vs) v = f32();
        return vs;
    }
    void done() const {
        if (pos != in.size())
            throw CorruptPayload("trailing bytes after payload");
    }
};

void write_header(Writer& w, std::uint32_t kind, std::uint32_t m,
                  std::uint32_t k, std::uint32_t v, std::uint32_t g) {
    w.out.insert(w.out.end(), kMagic, kMagic + 4);
    w.u32(kVersion);
    w.u32(kind);
    w.u32(m);
    w.u32(k);
    w.u32(v);
    w.u32(g);
}

void write_vector_wise_payload(Writer& w, const VectorWiseMatrix& m) {
    for (const auto& grp : m.groups) {
        w.u32(static_cast<std::uint32_t>(grp.cols.size()));
        for (std::uint32_t c : grp.cols) w.u32(c);
        w.f32s(grp.values);
    }
}

VectorWiseMatrix read_vector_wise_payload(Reader& r, std::uint32_t m,
                                          std::uint32_t k, std::uint32_t v,
                                          std::uint32_t g) {
    if (v == 0 || std::uint64_t(v) * g != m)
        throw CorruptPayload("vector-wise header: V * G != M");
    VectorWiseMatrix out;
    out.rows = m;
    out.cols = k;
    out.vector_size = v;
    out.groups.resize(g);
    for (auto& grp : out.groups) {
        const std::uint32_t ng = r.u32();
        if (ng > k) throw CorruptPayload("group column count exceeds K");
        grp.cols.resize(ng);
        std::uint64_t prev = 0;
        for (std::uint32_t j = 0; j < ng; ++j) {
            grp.cols[j] = r.u32();
            if (grp.cols[j] >= k || (j > 0 && grp.cols[j] <= prev))
                throw CorruptPayload(
                    "group columns must be strictly increasing and < K");
            prev = grp.cols[j];
        }
        grp.values = r.f32s(std::size_t(ng) * v);
    }
    return out;
}

void check_permutation(const std::vector<std::uint32_t>& idx,
                       std::uint32_t m) {
    std::vector<std::uint8_t> seen(m, 0);
    for (std::uint32_t r : idx) {
        if (r >= m || seen[r])
            throw CorruptPayload("row_indices is not a permutation of 0..M-1");
        seen[r] = 1;
    }
}

} // namespace

std::vector<std::uint8_t> encode_container(const AnyMatrix& any) {
    Writer w;
    if (const auto* d = std::get_if<DenseMatrix>(&any)) {
        write_header(w, kDense, d->rows, d->cols, 0, 0);
        w.f32s(d->values);
    } else if (const auto* msk = std::get_if<SparsityMask>(&any)) {
        write_header(w, kMask, msk->rows, msk->cols, 0, 0);
        std::vector<std::uint8_t> packed((msk->size() + 7) / 8, 0);
        for (std::size_t i = 0; i < msk->bits.size(); ++i)
            if (msk->bits[i]) packed[i / 8] |= std::uint8_t(1u << (i % 8));
        w.out.insert(w.out.end(), packed.begin(), packed.end());
    } else if (const auto* vw = std::get_if<VectorWiseMatrix>(&any)) {
        write_header(w, kVectorWise, vw->rows, vw->cols, vw->vector_size,
                     vw->group_count());
        write_vector_wise_payload(w, *vw);
    } else if (const auto* sb = std::get_if<ShflBWMatrix>(&any)) {
        write_header(w, kShflBW, sb->core.rows, sb->core.cols,
                     sb->core.vector_size, sb->core.group_count());
        for (std::uint32_t r : sb->row_indices) w.u32(r);
        write_vector_wise_payload(w, sb->core);
    } else if (const auto* bw = std::get_if<BlockWiseMatrix>(&any)) {
        write_header(w, kBlockWise, bw->rows, bw->cols, bw->block_size, 0);
        w.u32(bw->block_count());
        for (const auto& [br, bc] : bw->block_coords) {
            w.u32(br);
            w.u32(bc);
        }
        w.f32s(bw->block_values);
    }
    return std::move(w.out);
}

AnyMatrix decode_container(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw BadMagic("not an SMX1 container");
    Reader r{bytes, 4};
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw UnsupportedVersion("SMX1 version " + std::to_string(version));
    const std::uint32_t kind = r.u32();
    const std::uint32_t m = r.u32();
    const std::uint32_t k = r.u32();
    const std::uint32_t v = r.u32();
    const std::uint32_t g = r.u32();

    switch (kind) {
    case kDense: {
        auto values = r.f32s(std::size_t(m) * k);
        r.done();
        for (float x : values)
            if (!std::isfinite(x))
                throw CorruptPayload("dense payload holds non-finite value");
        DenseMatrix d;
        d.rows = m;
        d.cols = k;
        d.values = std::move(values);
        return d;
    }
    case kMask: {
        const std::size_t nbits = std::size_t(m) * k;
        const std::size_t nbytes = (nbits + 7) / 8;
        r.need(nbytes);
        SparsityMask msk(m, k);
        for (std::size_t i = 0; i < nbits; ++i)
            msk.bits[i] = (bytes[r.pos + i / 8] >> (i % 8)) & 1u;
        r.pos += nbytes;
        r.done();
        return msk;
    }
    case kVectorWise: {
        auto vw = read_vector_wise_payload(r, m, k, v, g);
        r.done();
        return vw;
    }
    case kShflBW: {
        ShflBWMatrix sb;
        r.need(std::size_t(m) * 4);
        sb.row_indices.resize(m);
        for (auto& idx : sb.row_indices) idx = r.u32();
        check_permutation(sb.row_indices, m);
        sb.core = read_vector_wise_payload(r, m, k, v, g);
        r.done();
        return sb;
    }
    case kBlockWise: {
        if (v == 0 || m % v != 0 || k % v != 0)
            throw CorruptPayload("block-wise header: V must divide M and K");
        BlockWiseMatrix bw;
        bw.rows = m;
        bw.cols = k;
        bw.block_size = v;
        const std::uint32_t nblocks = r.u32();
        r.need(std::size_t(nblocks) * 8);
        bw.block_coords.resize(nblocks);
        std::pair<std::uint32_t, std::uint32_t> prev{0, 0};
        for (std::uint32_t b = 0; b < nblocks; ++b) {
            bw.block_coords[b] = {r.u32(), r.u32()};
            const auto& [br, bc] = bw.block_coords[b];
            if (br >= m / v || bc >= k / v)
                throw CorruptPayload("block coordinate out of range");
            if (b > 0 && bw.block_coords[b] <= prev)
                throw CorruptPayload("block coordinates must be sorted and "
                                     "unique");
            prev = bw.block_coords[b];
        }
        bw.block_values = r.f32s(std::size_t(nblocks) * v * v);
        r.done();
        return bw;
    }
    default:
        throw CorruptPayload("unknown container kind " + std::to_string(kind));
    }
}

void write_container(const AnyMatrix& m, const std::filesystem::path& path) {
    const auto bytes = encode_container(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              std::streamsize(bytes.size()));
    if (!out) throw Error("write failed: " + path.string());
}

AnyMatrix read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw Error("cannot open: " + path.string());
    const auto size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw Error("read failed: " + path.string());
    return decode_container(bytes);
}

const DenseMatrix& as_dense(const AnyMatrix& m) {
    if (const auto* d = std::get_if<DenseMatrix>(&m)) return *d;
    throw BadParams("expected a dense SMX1 container");
}

const SparsityMask& as_mask(const AnyMatrix& m) {
    if (const auto* msk = std::get_if<SparsityMask>(&m)) return *msk;
    throw BadParams("expected a mask SMX1 container");
}

const ShflBWMatrix& as_shflbw(const AnyMatrix& m) {
    if (const auto* sb = std::get_if<ShflBWMatrix>(&m)) return *sb;
    throw BadParams("expected a shfl-bw SMX1 container");
}

} // namespace shflbw
