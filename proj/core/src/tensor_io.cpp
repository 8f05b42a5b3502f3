#include "fbev/tensor_io.hpp"

#include "fbev/errors.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

namespace fbev {

namespace {

template <typename U>
void put_le(std::string& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename U>
    U get() {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(U);
        return v;
    }

    std::string take(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw ValidationError("tensor: truncated input");
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t Tensor::element_count() const {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string serialize_tensor(const Tensor& t) {
    if (t.element_count() != t.values.size())
        throw ValidationError("tensor: shape does not match value count");
    std::string out(kTensorMagic, sizeof(kTensorMagic));
    put_le<std::uint32_t>(out, 1);
    put_le<std::uint32_t>(out, 2);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.kind.size()));
    out += t.kind;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_le<std::uint64_t>(out, d);
    out.reserve(out.size() + 8 * t.values.size());
    for (double v : t.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

Tensor parse_tensor(const std::string& bytes) {
    Reader r(bytes);
    if (r.take(sizeof(kTensorMagic)) != std::string(kTensorMagic, sizeof(kTensorMagic)))
        throw ValidationError("tensor: bad magic");
    if (r.get<std::uint32_t>() != 1) throw ValidationError("tensor: unsupported version");
    if (r.get<std::uint32_t>() != 2) throw ValidationError("tensor: unsupported dtype");
    Tensor t;
    t.kind = r.take(r.get<std::uint32_t>());
    const auto ndim = r.get<std::uint32_t>();
    if (ndim > 16) throw ValidationError("tensor: too many dimensions");
    for (std::uint32_t i = 0; i < ndim; ++i) t.shape.push_back(r.get<std::uint64_t>());
    const std::uint64_t n = t.element_count();
    if (r.remaining() != n * 8) throw ValidationError("tensor: body size does not match shape");
    t.values.resize(n);
    for (auto& v : t.values) v = std::bit_cast<double>(r.get<std::uint64_t>());
    return t;
}

Tensor to_tensor(const FeatureCloud& cloud) {
    Tensor t;
    t.kind = "feature_cloud";
    const std::size_t width = 4 + static_cast<std::size_t>(cloud.channels());
    t.shape = {cloud.size(), width};
    t.values.reserve(cloud.size() * width);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.point(i);
        t.values.push_back(p.x());
        t.values.push_back(p.y());
        t.values.push_back(p.z());
        t.values.push_back(static_cast<double>(cloud.camera_id(i)));
        const double* f = cloud.feature(i);
        t.values.insert(t.values.end(), f, f + cloud.channels());
    }
    return t;
}

FeatureCloud cloud_from_tensor(const Tensor& t) {
    if (t.kind != "feature_cloud" || t.shape.size() != 2 || t.shape[1] < 4)
        throw ValidationError("tensor: expected a feature_cloud [N, 4 + C]");
    const std::size_t width = t.shape[1];
    FeatureCloud cloud(static_cast<int>(width - 4));
    for (std::size_t i = 0; i < t.shape[0]; ++i) {
        const double* row = t.values.data() + i * width;
        cloud.add(Vec3(row[0], row[1], row[2]), row + 4, width - 4,
                  static_cast<std::int32_t>(row[3]));
    }
    return cloud;
}

Tensor to_tensor(const BevFeatureMap& map) {
    Tensor t;
    t.kind = map.grid.is_polar() ? "bev_polar" : "bev_cartesian";
    const auto d = map.grid.dims();
    t.shape = {static_cast<std::uint64_t>(map.channels), d[0], d[1]};
    t.values = map.data;
    return t;
}

Tensor to_tensor(const PositionEncodingInputs& pe, EncodingMode mode) {
    Tensor t;
    t.kind = mode == EncodingMode::polar ? "pe_polar" : "pe_cartesian";
    t.shape = {static_cast<std::uint64_t>(pe.rows), static_cast<std::uint64_t>(pe.cols), pe.depths,
               static_cast<std::uint64_t>(pe.width)};
    t.values = pe.values;
    const std::size_t per_pixel = pe.depths * static_cast<std::size_t>(pe.width);
    for (std::size_t px = 0; px < pe.valid.size(); ++px)
        if (!pe.valid[px])
            std::fill_n(t.values.begin() + static_cast<std::ptrdiff_t>(px * per_pixel), per_pixel,
                        std::numeric_limits<double>::quiet_NaN());
    return t;
}

}  // namespace fbev
