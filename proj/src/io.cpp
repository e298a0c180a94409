#include "wpsc/io.hpp"

#include "wpsc/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <regex>
#include <vector>

namespace wpsc {

namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + file.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset) {
    if (offset + 4 > buf.size()) fail(ErrorKind::Format, "idx: truncated header");
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

/// Maps arbitrary non-negative class ids onto 0..C-1 preserving order.
Labels compact_labels(const std::vector<int>& raw) {
    std::map<int, int> remap;
    for (int v : raw) remap.emplace(v, 0);
    int next = 0;
    for (auto& [key, value] : remap) value = next++;
    Labels out;
    out.reserve(raw.size());
    for (int v : raw) out.push_back(remap.at(v));
    return out;
}

class ByteWriter {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<unsigned char>((v >> (8 * k)) & 0xFFu));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int k = 0; k < 8; ++k)
            buf_.push_back(static_cast<unsigned char>((bits >> (8 * k)) & 0xFFu));
    }
    void flush(const fs::path& file) const {
        std::ofstream out(file, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot write " + file.string());
        out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        if (!out) fail(ErrorKind::Io, "write failed for " + file.string());
    }

private:
    std::vector<unsigned char> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<unsigned char> buf) : buf_(std::move(buf)) {}
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) fail(ErrorKind::Format, "bundle: truncated file");
    }
    std::uint8_t u8() {
        need(1);
        return buf_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= std::uint32_t{buf_[pos_++]} << (8 * k);
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= std::uint64_t{buf_[pos_++]} << (8 * k);
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    bool match(const char* magic) {
        const std::size_t n = std::strlen(magic);
        if (pos_ + n > buf_.size() || std::memcmp(buf_.data() + pos_, magic, n) != 0) return false;
        pos_ += n;
        return true;
    }
    bool at_end() const { return pos_ == buf_.size(); }

private:
    std::vector<unsigned char> buf_;
    std::size_t pos_ = 0;
};

constexpr const char* kBundleMagic = "WPSC1\n";

struct PgmImage {
    int width = 0;
    int height = 0;
    Matrix pixels;  // height x width, scaled to [0, 1]
};

PgmImage parse_pgm(const fs::path& file) {
    const auto buf = read_file(file);
    std::size_t pos = 0;
    auto skip_space_and_comments = [&] {
        while (pos < buf.size()) {
            if (buf[pos] == '#') {
                while (pos < buf.size() && buf[pos] != '\n') ++pos;
            } else if (std::isspace(buf[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&] {
        skip_space_and_comments();
        if (pos >= buf.size() || !std::isdigit(buf[pos]))
            fail(ErrorKind::Format, "pgm: bad header in " + file.string());
        long v = 0;
        while (pos < buf.size() && std::isdigit(buf[pos])) {
            v = v * 10 + (buf[pos++] - '0');
            if (v > 1 << 24) fail(ErrorKind::Format, "pgm: header value too large");
        }
        return static_cast<int>(v);
    };
    if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '5')
        fail(ErrorKind::Format, "pgm: " + file.string() + " is not a binary P5 file");
    pos = 2;
    PgmImage img;
    img.width = read_int();
    img.height = read_int();
    const int maxval = read_int();
    if (img.width <= 0 || img.height <= 0) fail(ErrorKind::Format, "pgm: empty image");
    if (maxval <= 0 || maxval > 255) fail(ErrorKind::Format, "pgm: maxval must be in 1..255");
    if (pos >= buf.size() || !std::isspace(buf[pos])) fail(ErrorKind::Format, "pgm: bad header");
    ++pos;
    const std::size_t count = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    if (pos + count > buf.size()) fail(ErrorKind::Format, "pgm: truncated pixel data");
    img.pixels.resize(img.height, img.width);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            img.pixels(r, c) =
                static_cast<double>(buf[pos + static_cast<std::size_t>(r) * img.width + c]) / maxval;
    return img;
}

}  // namespace

Dataset load_idx(const fs::path& images, const std::optional<fs::path>& labels) {
    const auto img = read_file(images);
    const std::uint32_t magic = read_be32(img, 0);
    if (magic != 0x00000803u) {
        fail(ErrorKind::Format, "idx: " + images.string() + " has magic 0x" +
                                    [&] {
                                        char b[16];
                                        std::snprintf(b, sizeof b, "%08x", magic);
                                        return std::string(b);
                                    }() +
                                    ", expected 0x00000803");
    }
    const std::uint32_t count = read_be32(img, 4);
    const std::uint32_t rows = read_be32(img, 8);
    const std::uint32_t cols = read_be32(img, 12);
    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    if (rows == 0 || cols == 0) fail(ErrorKind::Format, "idx: zero image dimension");
    if (16 + dim * count > img.size()) fail(ErrorKind::Format, "idx: truncated pixel data");

    Matrix x(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
    for (std::size_t n = 0; n < count; ++n)
        for (std::size_t p = 0; p < dim; ++p)
            x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n)) =
                static_cast<double>(img[16 + n * dim + p]) / 255.0;

    std::optional<Labels> lab;
    if (labels) {
        const auto lb = read_file(*labels);
        if (read_be32(lb, 0) != 0x00000801u)
            fail(ErrorKind::Format, "idx: " + labels->string() + " is not a label file");
        const std::uint32_t n_labels = read_be32(lb, 4);
        if (n_labels != count) {
            fail(ErrorKind::Consistency, "idx: " + std::to_string(count) + " images but " +
                                             std::to_string(n_labels) + " labels");
        }
        if (8 + static_cast<std::size_t>(n_labels) > lb.size())
            fail(ErrorKind::Format, "idx: truncated label data");
        std::vector<int> raw(lb.begin() + 8, lb.begin() + 8 + n_labels);
        lab = compact_labels(raw);
    }
    return Dataset(std::move(x), static_cast<int>(rows), static_cast<int>(cols), std::move(lab),
                   images.stem().string());
}

Dataset load_pgm(const fs::path& file) {
    const PgmImage img = parse_pgm(file);
    Matrix x(static_cast<Eigen::Index>(img.width) * img.height, 1);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) x(r * img.width + c, 0) = img.pixels(r, c);
    return Dataset(std::move(x), img.height, img.width, std::nullopt, file.stem().string());
}

Dataset load_pgm_dir(const fs::path& dir, const std::string& class_pattern) {
    if (!fs::is_directory(dir)) fail(ErrorKind::Io, "not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".pgm" || ext == ".PGM") files.push_back(entry.path());
    }
    if (files.empty()) fail(ErrorKind::EmptyInput, "no PGM files in " + dir.string());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

    const std::regex re(class_pattern);
    std::vector<int> raw;
    std::vector<PgmImage> images;
    for (const auto& f : files) {
        const std::string fname = f.filename().string();
        std::smatch m;
        if (!std::regex_search(fname, m, re) || m.size() < 2 || !m[1].matched) {
            fail(ErrorKind::Labeling, "filename '" + fname + "' does not match class pattern");
        }
        try {
            raw.push_back(std::stoi(m[1].str()));
        } catch (const std::exception&) {
            fail(ErrorKind::Labeling, "filename '" + fname + "': class id is not an integer");
        }
        images.push_back(parse_pgm(f));
        if (images.back().width != images.front().width ||
            images.back().height != images.front().height) {
            fail(ErrorKind::Consistency, "pgm: " + fname + " is " +
                                             std::to_string(images.back().height) + "x" +
                                             std::to_string(images.back().width) + ", expected " +
                                             std::to_string(images.front().height) + "x" +
                                             std::to_string(images.front().width));
        }
    }
    const int h = images.front().height;
    const int w = images.front().width;
    Matrix x(static_cast<Eigen::Index>(h) * w, static_cast<Eigen::Index>(images.size()));
    for (std::size_t n = 0; n < images.size(); ++n)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                x(r * w + c, static_cast<Eigen::Index>(n)) = images[n].pixels(r, c);
    return Dataset(std::move(x), h, w, compact_labels(raw), dir.filename().string());
}

void write_pgm(const fs::path& file, const Matrix& image01) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + file.string());
    out << "P5\n" << image01.cols() << " " << image01.rows() << "\n255\n";
    for (Eigen::Index r = 0; r < image01.rows(); ++r) {
        for (Eigen::Index c = 0; c < image01.cols(); ++c) {
            const double v = std::clamp(image01(r, c), 0.0, 1.0);
            out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
        }
    }
}

void save_bundle(const fs::path& file, const Dataset& ds) {
    ByteWriter w;
    w.bytes(kBundleMagic, std::strlen(kBundleMagic));
    w.u32(static_cast<std::uint32_t>(ds.dim()));
    w.u32(static_cast<std::uint32_t>(ds.size()));
    w.u32(static_cast<std::uint32_t>(ds.img_h()));
    w.u32(static_cast<std::uint32_t>(ds.img_w()));
    w.u8(ds.has_labels() ? 1 : 0);
    const Matrix& x = ds.data();
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i) w.f64(x(i, j));
    if (ds.has_labels())
        for (int l : ds.labels()) w.u32(static_cast<std::uint32_t>(l));
    w.flush(file);
}

Dataset load_bundle(const fs::path& file, const std::string& name) {
    ByteReader r(read_file(file));
    if (!r.match(kBundleMagic)) fail(ErrorKind::Format, "bundle: bad magic in " + file.string());
    const std::uint32_t d = r.u32();
    const std::uint32_t n = r.u32();
    const std::uint32_t h = r.u32();
    const std::uint32_t w = r.u32();
    const std::uint8_t has_labels = r.u8();
    if (has_labels > 1) fail(ErrorKind::Format, "bundle: bad label flag");
    if (static_cast<std::uint64_t>(h) * w != d) fail(ErrorKind::Format, "bundle: img_h*img_w != D");
    r.need(static_cast<std::size_t>(d) * n * 8);
    Matrix x(d, n);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = r.f64();
    std::optional<Labels> labels;
    if (has_labels) {
        labels.emplace(n);
        for (auto& l : *labels) l = static_cast<int>(r.u32());
    }
    if (!r.at_end()) fail(ErrorKind::Format, "bundle: trailing bytes in " + file.string());
    return Dataset(std::move(x), static_cast<int>(h), static_cast<int>(w), std::move(labels),
                   name.empty() ? file.stem().string() : name);
}

void save_matrix(const fs::path& file, const Matrix& m) {
    save_bundle(file, Dataset(m, static_cast<int>(m.rows()), 1));
}

Matrix load_matrix(const fs::path& file) { return load_bundle(file).data(); }

}  // namespace wpsc
