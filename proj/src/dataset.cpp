#include "genbound/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace genbound {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_idx: cannot open " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(f),
                                      std::istreambuf_iterator<char>());
}

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& in) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
        throw std::runtime_error("load_idx: zlib init failed");
    std::vector<unsigned char> out;
    std::vector<unsigned char> buf(1 << 16);
    zs.next_in = const_cast<unsigned char*>(in.data());
    zs.avail_in = uInt(in.size());
    int ret = Z_OK;
    while (ret != Z_STREAM_END) {
        zs.next_out = buf.data();
        zs.avail_out = uInt(buf.size());
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw std::runtime_error("load_idx: corrupt gzip stream");
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    }
    inflateEnd(&zs);
    return out;
}

std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

}  // namespace

Dataset load_idx(const std::string& path) {
    std::vector<unsigned char> bytes = read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) bytes = gunzip(bytes);
    if (bytes.size() < 8) throw std::runtime_error("load_idx: truncated payload");

    std::uint32_t magic = be32(bytes.data());
    Dataset ds;
    if (magic == 0x00000803u) {
        if (bytes.size() < 16) throw std::runtime_error("load_idx: truncated payload");
        std::uint64_t n = be32(bytes.data() + 4);
        std::uint64_t rows = be32(bytes.data() + 8);
        std::uint64_t cols = be32(bytes.data() + 12);
        std::uint64_t d = rows * cols;
        if (n > (1u << 26) || d > (1u << 24)) throw std::runtime_error("load_idx: dim overflow");
        std::uint64_t need = 16 + n * d;
        if (bytes.size() < need) throw std::runtime_error("load_idx: truncated payload");
        ds.n = int(n);
        ds.d_in = int(d);
        ds.inputs.resize(n * d);
        for (std::uint64_t i = 0; i < n * d; ++i) ds.inputs[i] = bytes[16 + i] / 255.0;
    } else if (magic == 0x00000801u) {
        std::uint64_t n = be32(bytes.data() + 4);
        if (n > (1u << 26)) throw std::runtime_error("load_idx: dim overflow");
        if (bytes.size() < 8 + n) throw std::runtime_error("load_idx: truncated payload");
        ds.n = int(n);
        ds.labels.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) ds.labels[i] = int(bytes[8 + i]);
    } else {
        throw std::runtime_error("load_idx: bad magic");
    }
    return ds;
}

void validate_labels(const Dataset& ds, int num_classes) {
    for (int y : ds.labels)
        if (y < 0 || y >= num_classes)
            throw std::runtime_error("dataset: label " + std::to_string(y) +
                                     " out of range for " + std::to_string(num_classes) +
                                     " classes");
}

Dataset merge_idx(const Dataset& images, const Dataset& labels, int num_classes) {
    if (images.n != labels.n) throw std::runtime_error("merge_idx: count mismatch");
    Dataset ds = images;
    ds.labels = labels.labels;
    validate_labels(ds, num_classes);
    return ds;
}

Dataset synth_gaussian_mixture(std::uint64_t seed, int n, int d_in, int classes,
                               double separation) {
    if (classes < 2) throw std::invalid_argument("synth_gaussian_mixture: classes < 2");
    if (separation < 0.0) throw std::invalid_argument("synth_gaussian_mixture: separation < 0");
    if (classes > d_in) throw std::invalid_argument("synth_gaussian_mixture: classes > d_in");

    // Means s/sqrt(2) * e_c are pairwise `separation` apart.
    const double scale = separation / std::sqrt(2.0);
    Dataset ds;
    ds.n = n;
    ds.d_in = d_in;
    ds.inputs.resize(std::size_t(n) * d_in);
    ds.labels.resize(n);
    RngStream rng(seed, 0);
    for (int i = 0; i < n; ++i) {
        int c = int(rng.uniform_below(std::uint64_t(classes)));
        ds.labels[i] = c;
        double* x = ds.row(i);
        for (int j = 0; j < d_in; ++j) x[j] = rng.next_gaussian();
        x[c] += scale;
    }
    return ds;
}

SplitPlan partition(const Dataset& pool, int k, double test_frac, double val_frac,
                    std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("partition: k < 2");
    int n = pool.n;
    int n_test = int(test_frac * n);
    int n_val = int(val_frac * n);
    int n_train = n - n_test - n_val;
    if (n_train < k) throw std::runtime_error("partition: pool too small");

    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    RngStream rng(seed, 1);
    for (int i = n - 1; i > 0; --i) {
        int j = int(rng.uniform_below(std::uint64_t(i) + 1));
        std::swap(idx[i], idx[j]);
    }

    SplitPlan plan;
    plan.seed = seed;
    int pos = 0;
    plan.test.assign(idx.begin() + pos, idx.begin() + pos + n_test);
    pos += n_test;
    plan.val.assign(idx.begin() + pos, idx.begin() + pos + n_val);
    pos += n_val;
    plan.train_splits.resize(k);
    int base = n_train / k, extra = n_train % k;
    for (int s = 0; s < k; ++s) {
        int sz = base + (s < extra ? 1 : 0);
        plan.train_splits[s].assign(idx.begin() + pos, idx.begin() + pos + sz);
        pos += sz;
    }
    return plan;
}

}  // namespace genbound
