#include "aog/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "aog/errors.hpp"

namespace aog {

namespace {

constexpr char kMagic[7] = {'A', 'O', 'G', 'D', 'S', 'E', 'T'};

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    void raw(const char* p, std::size_t n) { buf_.append(p, n); }
    std::string take() { return std::move(buf_); }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * i);
        return std::bit_cast<double>(bits);
    }
    std::size_t pos() const { return pos_; }
    bool done() const { return pos_ == bytes_.size(); }
    // Upper bound check for counts read from the file, so a corrupt header
    // cannot trigger a huge allocation.
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw ParseError("dataset truncated at byte " + std::to_string(pos_) + " (needed " + std::to_string(n) +
                             " more bytes)");
        }
    }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::size_t Dataset::num_rois() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.rois.size();
    return n;
}

void validate_dataset(const Dataset& ds) {
    if (ds.num_classes < 1) throw InputError("dataset must declare at least one class");
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        const std::string where = "sample " + std::to_string(i);
        if (s.feature.channels() < 1 || s.feature.height < 1 || s.feature.width < 1 ||
            s.feature.values.cols() != static_cast<Eigen::Index>(s.feature.height) * s.feature.width) {
            throw InputError(where + ": feature map has invalid dimensions");
        }
        if (!s.feature.values.allFinite()) throw InputError(where + ": feature map has non-finite values");
        if (s.truth.size() != s.rois.size()) throw InputError(where + ": ground truth list length differs from RoIs");
        for (std::size_t r = 0; r < s.rois.size(); ++r) {
            const auto& roi = s.rois[r];
            if (roi.x0 < 0 || roi.y0 < 0 || roi.x1 <= roi.x0 || roi.y1 <= roi.y0 || roi.x1 > s.feature.width ||
                roi.y1 > s.feature.height) {
                throw InputError(where + ", roi " + std::to_string(r) + ": box outside the feature map");
            }
            if (roi.label && (*roi.label < 0 || *roi.label >= ds.num_classes)) {
                throw InputError(where + ", roi " + std::to_string(r) + ": label out of range");
            }
            if (const auto& t = s.truth[r]; t && (t->grid_w != ds.grid_w || t->grid_h != ds.grid_h)) {
                throw InputError(where + ", roi " + std::to_string(r) + ": ground truth grid differs from dataset grid");
            }
        }
    }
}

std::string serialize_dataset(const Dataset& ds) {
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.u8(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(ds.grid_w));
    w.u32(static_cast<std::uint32_t>(ds.grid_h));
    w.u32(static_cast<std::uint32_t>(ds.num_classes));
    w.u32(static_cast<std::uint32_t>(ds.samples.size()));
    for (const auto& s : ds.samples) {
        const auto D = static_cast<int>(s.feature.channels());
        w.u32(static_cast<std::uint32_t>(D));
        w.u32(static_cast<std::uint32_t>(s.feature.height));
        w.u32(static_cast<std::uint32_t>(s.feature.width));
        for (int d = 0; d < D; ++d) {
            for (int y = 0; y < s.feature.height; ++y) {
                for (int x = 0; x < s.feature.width; ++x) w.f64(s.feature.at(d, y, x));
            }
        }
        w.u32(static_cast<std::uint32_t>(s.rois.size()));
        for (std::size_t r = 0; r < s.rois.size(); ++r) {
            const auto& roi = s.rois[r];
            w.i32(roi.x0);
            w.i32(roi.y0);
            w.i32(roi.x1);
            w.i32(roi.y1);
            w.i32(roi.label.value_or(-1));
            const auto& truth = r < s.truth.size() ? s.truth[r] : std::nullopt;
            w.u32(truth ? static_cast<std::uint32_t>(truth->rects.size()) : 0U);
            if (truth) {
                for (const auto& rc : truth->rects) {
                    w.u32(static_cast<std::uint32_t>(rc.x));
                    w.u32(static_cast<std::uint32_t>(rc.y));
                    w.u32(static_cast<std::uint32_t>(rc.w));
                    w.u32(static_cast<std::uint32_t>(rc.h));
                }
            }
        }
    }
    return w.take();
}

Dataset deserialize_dataset(const std::string& bytes) {
    Reader r(bytes);
    r.need(sizeof kMagic + 1);
    if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw ParseError("not a dataset file (bad magic at byte 0)");
    for (std::size_t i = 0; i < sizeof kMagic; ++i) r.u8();
    const std::uint8_t version = r.u8();
    if (version != kDatasetVersion) {
        throw VersionError("dataset format version " + std::to_string(version) + " is not supported (expected " +
                           std::to_string(kDatasetVersion) + ")");
    }

    Dataset ds;
    ds.grid_w = static_cast<int>(r.u32());
    ds.grid_h = static_cast<int>(r.u32());
    ds.num_classes = static_cast<int>(r.u32());
    const std::uint32_t num_samples = r.u32();
    for (std::uint32_t i = 0; i < num_samples; ++i) {
        const auto D = r.u32();
        const auto H = r.u32();
        const auto W = r.u32();
        const std::uint64_t n = static_cast<std::uint64_t>(D) * H * W;
        r.need(static_cast<std::size_t>(n * 8));
        Sample s;
        s.feature = FeatureMap<double>(static_cast<int>(D), static_cast<int>(H), static_cast<int>(W));
        for (std::uint32_t d = 0; d < D; ++d) {
            for (std::uint32_t y = 0; y < H; ++y) {
                for (std::uint32_t x = 0; x < W; ++x) {
                    s.feature.at(static_cast<int>(d), static_cast<int>(y), static_cast<int>(x)) = r.f64();
                }
            }
        }
        const auto num_rois = r.u32();
        r.need(static_cast<std::size_t>(num_rois) * 24);
        for (std::uint32_t k = 0; k < num_rois; ++k) {
            Roi roi;
            roi.x0 = r.i32();
            roi.y0 = r.i32();
            roi.x1 = r.i32();
            roi.y1 = r.i32();
            const auto label = r.i32();
            if (label >= 0) roi.label = label;
            const auto nrect = r.u32();
            r.need(static_cast<std::size_t>(nrect) * 16);
            std::optional<Configuration> truth;
            if (nrect > 0) {
                std::vector<Rect> rects;
                for (std::uint32_t q = 0; q < nrect; ++q) {
                    Rect rc;
                    rc.x = static_cast<int>(r.u32());
                    rc.y = static_cast<int>(r.u32());
                    rc.w = static_cast<int>(r.u32());
                    rc.h = static_cast<int>(r.u32());
                    rects.push_back(rc);
                }
                truth = make_configuration(ds.grid_w, ds.grid_h, std::move(rects));
            }
            s.rois.push_back(roi);
            s.truth.push_back(std::move(truth));
        }
        ds.samples.push_back(std::move(s));
    }
    if (!r.done()) throw ParseError("trailing bytes after dataset at byte " + std::to_string(r.pos()));
    try {
        validate_dataset(ds);
    } catch (const InputError& e) {
        throw ParseError(std::string("invalid dataset contents: ") + e.what());
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    validate_dataset(ds);
    const std::string bytes = serialize_dataset(ds);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("failed writing '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "' for reading");
    std::ostringstream s;
    s << in.rdbuf();
    try {
        return deserialize_dataset(s.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace aog
