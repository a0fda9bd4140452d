#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cce/errors.hpp"
#include "cce/training.hpp"

namespace cce {

namespace {

constexpr char kMagic[8] = {'C', 'C', 'E', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint32_t crc32(const std::string& bytes) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int bit = 0; bit < 8; ++bit)
                c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xffffffffu;
    for (unsigned char byte : bytes)
        crc = table[(crc ^ byte) & 0xffu] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        u64(bits);
    }
    void str(const std::string& s) {
        u64(s.size());
        bytes_.append(s);
    }
    void vec(const Vec& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void mat(const Mat& m) {
        u64(m.rows);
        u64(m.cols);
        for (double x : m.data) f64(x);
    }
    const std::string& bytes() const { return bytes_; }

private:
    std::string bytes_;
};

class Reader {
public:
    explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string str() {
        const std::uint64_t n = u64();
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    Vec vec() {
        const std::uint64_t n = u64();
        Vec v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    Mat mat() {
        const std::uint64_t rows = u64();
        const std::uint64_t cols = u64();
        Mat m(rows, cols);
        for (auto& x : m.data) x = f64();
        return m;
    }
    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    void need(std::uint64_t n) {
        if (pos_ + n > bytes_.size())
            throw TruncationError("model payload ends prematurely");
    }
    std::string bytes_;
    std::size_t pos_ = 0;
};

void write_cell(Writer& w, const LstmCellParams& cell) {
    w.mat(cell.w_i);
    w.mat(cell.w_f);
    w.mat(cell.w_o);
    w.mat(cell.w_g);
    w.mat(cell.u_i);
    w.mat(cell.u_f);
    w.mat(cell.u_o);
    w.mat(cell.u_g);
    w.vec(cell.b_i);
    w.vec(cell.b_f);
    w.vec(cell.b_o);
    w.vec(cell.b_g);
}

LstmCellParams read_cell(Reader& r) {
    LstmCellParams cell;
    cell.w_i = r.mat();
    cell.w_f = r.mat();
    cell.w_o = r.mat();
    cell.w_g = r.mat();
    cell.u_i = r.mat();
    cell.u_f = r.mat();
    cell.u_o = r.mat();
    cell.u_g = r.mat();
    cell.b_i = r.vec();
    cell.b_f = r.vec();
    cell.b_o = r.vec();
    cell.b_g = r.vec();
    return cell;
}

} // namespace

void save_model(const ModelParams& model, std::ostream& out) {
    Writer payload;
    payload.u64(model.tagset.classes.size());
    for (const auto& cls : model.tagset.classes) payload.str(cls);
    payload.u64(model.vocab.size());
    for (const auto& token : model.vocab.index_to_token) payload.str(token);
    payload.u64(model.hp.hidden);
    payload.u64(model.hp.window);
    payload.u64(model.hp.dim);
    payload.f64(model.hp.learning_rate);
    payload.f64(model.hp.dropout_rate);
    payload.u64(model.hp.max_epochs);
    payload.u64(model.hp.seed);
    payload.mat(model.embeddings.matrix);
    for (RowOrigin origin : model.embeddings.origin)
        payload.u8(static_cast<std::uint8_t>(origin));
    write_cell(payload, model.net.fwd);
    write_cell(payload, model.net.bwd);
    payload.mat(model.net.w_proj);
    payload.vec(model.net.b_proj);
    payload.u64(model.crf.num_tags);
    payload.mat(model.crf.transitions);

    Writer head;
    head.u32(kFormatVersion);
    head.u32(crc32(payload.bytes()));
    head.u64(payload.bytes().size());

    out.write(kMagic, sizeof(kMagic));
    out.write(head.bytes().data(), static_cast<std::streamsize>(head.bytes().size()));
    out.write(payload.bytes().data(),
              static_cast<std::streamsize>(payload.bytes().size()));
    if (!out) throw IoError("failed to write model container");
}

void save_model(const ModelParams& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    save_model(model, out);
}

ModelParams load_model(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatError("not a model container (bad magic)");

    char head_bytes[16];
    in.read(head_bytes, sizeof(head_bytes));
    if (in.gcount() != sizeof(head_bytes))
        throw TruncationError("model container header is incomplete");
    Reader head(std::string(head_bytes, sizeof(head_bytes)));
    const std::uint32_t version = head.u32();
    if (version != kFormatVersion)
        throw VersionError("unsupported model format version " +
                           std::to_string(version));
    const std::uint32_t expected_crc = head.u32();
    const std::uint64_t payload_size = head.u64();

    std::string payload(payload_size, '\0');
    in.read(payload.data(), static_cast<std::streamsize>(payload_size));
    if (static_cast<std::uint64_t>(in.gcount()) != payload_size)
        throw TruncationError("model payload is shorter than declared");
    if (crc32(payload) != expected_crc)
        throw ChecksumError("model payload checksum mismatch");

    Reader r(std::move(payload));
    ModelParams model;

    std::vector<std::string> classes(r.u64());
    for (auto& cls : classes) cls = r.str();
    model.tagset = TagSet::for_classes(std::move(classes));

    const std::uint64_t vocab_size = r.u64();
    if (vocab_size < 2) throw FormatError("vocabulary too small for reserved rows");
    model.vocab.index_to_token.resize(vocab_size);
    for (auto& token : model.vocab.index_to_token) token = r.str();
    for (std::size_t i = 0; i < vocab_size; ++i)
        model.vocab.token_to_index[model.vocab.index_to_token[i]] = i;

    model.hp.hidden = r.u64();
    model.hp.window = r.u64();
    model.hp.dim = r.u64();
    model.hp.learning_rate = r.f64();
    model.hp.dropout_rate = r.f64();
    model.hp.max_epochs = r.u64();
    model.hp.seed = r.u64();

    model.embeddings.matrix = r.mat();
    model.embeddings.origin.resize(model.embeddings.matrix.rows);
    for (auto& origin : model.embeddings.origin) {
        const std::uint8_t raw = r.u8();
        if (raw > 2) throw FormatError("bad embedding row origin flag");
        origin = static_cast<RowOrigin>(raw);
    }
    model.net.fwd = read_cell(r);
    model.net.bwd = read_cell(r);
    model.net.w_proj = r.mat();
    model.net.b_proj = r.vec();
    model.crf.num_tags = r.u64();
    model.crf.transitions = r.mat();

    if (!r.exhausted()) throw FormatError("trailing bytes after model payload");
    if (model.embeddings.matrix.rows != model.vocab.size() ||
        model.embeddings.matrix.cols != model.hp.dim ||
        model.net.input_dim() != model.hp.window * model.hp.dim ||
        model.net.num_tags() != model.tagset.size() ||
        model.crf.num_tags != model.tagset.size())
        throw FormatError("model tensor dimensions are inconsistent");
    return model;
}

ModelParams load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return load_model(in);
}

} // namespace cce
