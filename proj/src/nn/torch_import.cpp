#include "uwsr/nn/torch_import.hpp"

#include <zlib.h>

#include <bit>
#include <fstream>
#include <functional>
#include <cstring>
#include <memory>
#include <set>

#include "uwsr/error.hpp"
#include "uwsr/fileio.hpp"
#include "uwsr/nn/discriminator.hpp"
#include "uwsr/nn/generator.hpp"
#include "uwsr/nn/vgg.hpp"

namespace uwsr::nn {
namespace fs = std::filesystem;

namespace {

template <typename U>
U read_le(const unsigned char* p) {
    U v;
    std::memcpy(&v, p, sizeof(U));
    return v;
}

}  // namespace

// ---- zip ---------------------------------------------------------------------

bool ZipReader::looks_like_zip(const std::vector<unsigned char>& bytes) {
    return bytes.size() >= 4 && read_le<std::uint32_t>(bytes.data()) == 0x04034b50u;
}

ZipReader::ZipReader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {
    const auto& b = bytes_;
    if (b.size() < 22) fail(ErrorCode::ParseError, "zip archive is truncated");
    std::size_t eocd = std::string::npos;
    const std::size_t floor = b.size() > 22 + 65535 ? b.size() - 22 - 65535 : 0;
    for (std::size_t i = b.size() - 22 + 1; i-- > floor;) {
        if (read_le<std::uint32_t>(&b[i]) == 0x06054b50u) {
            eocd = i;
            break;
        }
    }
    if (eocd == std::string::npos) fail(ErrorCode::ParseError, "zip end-of-directory record not found");
    std::uint64_t count = read_le<std::uint16_t>(&b[eocd + 10]);
    std::uint64_t dir_offset = read_le<std::uint32_t>(&b[eocd + 16]);
    if (dir_offset == 0xffffffffu || count == 0xffffu) {
        // zip64: the locator sits right before the classic record.
        if (eocd < 20 || read_le<std::uint32_t>(&b[eocd - 20]) != 0x07064b50u) {
            fail(ErrorCode::ParseError, "zip64 locator missing");
        }
        const std::uint64_t rec = read_le<std::uint64_t>(&b[eocd - 20 + 8]);
        if (rec + 56 > b.size() || read_le<std::uint32_t>(&b[rec]) != 0x06064b50u) {
            fail(ErrorCode::ParseError, "zip64 end-of-directory record malformed");
        }
        count = read_le<std::uint64_t>(&b[rec + 32]);
        dir_offset = read_le<std::uint64_t>(&b[rec + 48]);
    }
    std::size_t p = dir_offset;
    for (std::uint64_t k = 0; k < count; ++k) {
        if (p + 46 > b.size() || read_le<std::uint32_t>(&b[p]) != 0x02014b50u) {
            fail(ErrorCode::ParseError, "zip central directory entry malformed");
        }
        Member m{};
        m.method = read_le<std::uint16_t>(&b[p + 10]);
        m.compressed_size = read_le<std::uint32_t>(&b[p + 20]);
        m.size = read_le<std::uint32_t>(&b[p + 24]);
        const std::uint16_t name_len = read_le<std::uint16_t>(&b[p + 28]);
        const std::uint16_t extra_len = read_le<std::uint16_t>(&b[p + 30]);
        const std::uint16_t comment_len = read_le<std::uint16_t>(&b[p + 32]);
        m.local_offset = read_le<std::uint32_t>(&b[p + 42]);
        if (p + 46 + name_len + extra_len > b.size()) fail(ErrorCode::ParseError, "zip entry runs past the end");
        std::string name(reinterpret_cast<const char*>(&b[p + 46]), name_len);
        // zip64 extra field carries whichever sizes overflowed, in fixed order.
        std::size_t e = p + 46 + name_len;
        const std::size_t e_end = e + extra_len;
        while (e + 4 <= e_end) {
            const std::uint16_t id = read_le<std::uint16_t>(&b[e]);
            const std::uint16_t len = read_le<std::uint16_t>(&b[e + 2]);
            if (id == 0x0001) {
                std::size_t q = e + 4;
                if (m.size == 0xffffffffu) m.size = read_le<std::uint64_t>(&b[q]), q += 8;
                if (m.compressed_size == 0xffffffffu) m.compressed_size = read_le<std::uint64_t>(&b[q]), q += 8;
                if (m.local_offset == 0xffffffffu) m.local_offset = read_le<std::uint64_t>(&b[q]);
            }
            e += 4 + len;
        }
        members_[name] = m;
        p += 46 + name_len + extra_len + comment_len;
    }
}

std::vector<std::string> ZipReader::names() const {
    std::vector<std::string> out;
    for (const auto& [name, m] : members_) out.push_back(name);
    return out;
}

std::vector<unsigned char> ZipReader::read(const std::string& name) const {
    auto it = members_.find(name);
    if (it == members_.end()) fail(ErrorCode::ParseError, "zip member not found: " + name);
    const Member& m = it->second;
    const auto& b = bytes_;
    if (m.local_offset + 30 > b.size() || read_le<std::uint32_t>(&b[m.local_offset]) != 0x04034b50u) {
        fail(ErrorCode::ParseError, "zip local header malformed for " + name);
    }
    const std::size_t data = m.local_offset + 30 + read_le<std::uint16_t>(&b[m.local_offset + 26]) +
                             read_le<std::uint16_t>(&b[m.local_offset + 28]);
    if (data + m.compressed_size > b.size()) fail(ErrorCode::ParseError, "zip member runs past the end: " + name);
    if (m.method == 0) return {b.begin() + static_cast<std::ptrdiff_t>(data),
                               b.begin() + static_cast<std::ptrdiff_t>(data + m.compressed_size)};
    if (m.method != 8) fail(ErrorCode::ParseError, "unsupported zip compression method for " + name);

    std::vector<unsigned char> out(m.size);
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) fail(ErrorCode::ParseError, "inflate init failed");
    zs.next_in = const_cast<Bytef*>(&b[data]);
    zs.avail_in = static_cast<uInt>(m.compressed_size);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != m.size) fail(ErrorCode::ParseError, "corrupt deflate data in " + name);
    return out;
}

// ---- pickle --------------------------------------------------------------------

namespace {

struct PyObj;
using Ref = std::shared_ptr<PyObj>;

enum class Kind { None, Bool, Int, Float, Str, Bytes, Tuple, List, Dict, Set, Global, Object, Storage, Tensor };

struct PyObj {
    Kind kind = Kind::None;
    std::int64_t i = 0;
    double f = 0.0;
    std::string s;                            // Str, Bytes, Global ("module.name"), Storage key
    std::vector<Ref> items;                   // Tuple, List, Set; Object: callable then args
    std::vector<std::pair<Ref, Ref>> dict;    // Dict
    DType dtype = DType::F32;                 // Storage
    Ref storage;                              // Tensor
    std::int64_t offset = 0;                  // Tensor
    std::vector<std::int64_t> sizes, strides; // Tensor
};

Ref make(Kind k) {
    auto r = std::make_shared<PyObj>();
    r->kind = k;
    return r;
}

Ref make_int(std::int64_t v) {
    auto r = make(Kind::Int);
    r->i = v;
    return r;
}

Ref make_str(Kind k, std::string s) {
    auto r = make(k);
    r->s = std::move(s);
    return r;
}

DType storage_dtype(const std::string& global) {
    static const std::map<std::string, DType> table{
        {"torch.FloatStorage", DType::F32}, {"torch.DoubleStorage", DType::F64}, {"torch.HalfStorage", DType::F16},
        {"torch.BFloat16Storage", DType::BF16}, {"torch.LongStorage", DType::I64}, {"torch.IntStorage", DType::I32},
        {"torch.ByteStorage", DType::U8}};
    auto it = table.find(global);
    if (it == table.end()) fail(ErrorCode::ParseError, "unsupported storage type " + global);
    return it->second;
}

std::vector<std::int64_t> int_tuple(const Ref& r) {
    if (r->kind != Kind::Tuple && r->kind != Kind::List) fail(ErrorCode::ParseError, "expected a tuple of ints");
    std::vector<std::int64_t> out;
    for (const auto& x : r->items) {
        if (x->kind != Kind::Int) fail(ErrorCode::ParseError, "expected a tuple of ints");
        out.push_back(x->i);
    }
    return out;
}

class Unpickler {
public:
    Unpickler(const unsigned char* data, std::size_t size, std::size_t pos = 0) : d_(data), n_(size), pos_(pos) {}
    Ref load();
    std::size_t position() const { return pos_; }

private:
    const unsigned char* take(std::size_t k) {
        if (pos_ + k > n_) fail(ErrorCode::ParseError, "pickle stream is truncated");
        const unsigned char* p = d_ + pos_;
        pos_ += k;
        return p;
    }
    std::string take_string(std::size_t k) {
        const auto* p = take(k);
        return {reinterpret_cast<const char*>(p), k};
    }
    std::string take_line() {
        std::string s;
        while (true) {
            const char c = static_cast<char>(*take(1));
            if (c == '\n') return s;
            s += c;
        }
    }
    Ref pop() {
        if (stack_.empty()) fail(ErrorCode::ParseError, "pickle stack underflow");
        Ref r = stack_.back();
        stack_.pop_back();
        return r;
    }
    std::vector<Ref> pop_mark() {
        if (marks_.empty()) fail(ErrorCode::ParseError, "pickle mark missing");
        const std::size_t m = marks_.back();
        marks_.pop_back();
        std::vector<Ref> items(stack_.begin() + static_cast<std::ptrdiff_t>(m), stack_.end());
        stack_.resize(m);
        return items;
    }
    Ref& top() {
        if (stack_.empty()) fail(ErrorCode::ParseError, "pickle stack underflow");
        return stack_.back();
    }
    Ref memo_get(std::size_t k) {
        auto it = memo_.find(k);
        if (it == memo_.end()) fail(ErrorCode::ParseError, "pickle memo miss");
        return it->second;
    }
    Ref reduce(const Ref& callable, const Ref& args);
    Ref persistent(const Ref& pid);

    const unsigned char* d_;
    std::size_t n_;
    std::size_t pos_;
    std::vector<Ref> stack_;
    std::vector<std::size_t> marks_;
    std::map<std::size_t, Ref> memo_;
};

Ref Unpickler::persistent(const Ref& pid) {
    if (pid->kind != Kind::Tuple || pid->items.size() < 5 || pid->items[0]->kind != Kind::Str ||
        pid->items[0]->s != "storage") {
        fail(ErrorCode::ParseError, "unsupported persistent id in checkpoint");
    }
    const auto& type = pid->items[1];
    const auto& key = pid->items[2];
    if (type->kind != Kind::Global || key->kind != Kind::Str) fail(ErrorCode::ParseError, "malformed storage reference");
    if (pid->items.size() > 5 && pid->items[5]->kind != Kind::None) {
        fail(ErrorCode::ParseError, "storage views are not supported");
    }
    auto s = make_str(Kind::Storage, key->s);
    s->dtype = storage_dtype(type->s);
    s->i = pid->items[4]->kind == Kind::Int ? pid->items[4]->i : 0;
    return s;
}

Ref Unpickler::reduce(const Ref& callable, const Ref& args) {
    const std::string name = callable->kind == Kind::Global ? callable->s : "";
    const auto& a = args->items;
    if (name == "collections.OrderedDict" || name == "builtins.dict") {
        auto d = make(Kind::Dict);
        if (!a.empty() && (a[0]->kind == Kind::List || a[0]->kind == Kind::Tuple)) {
            for (const auto& pair : a[0]->items) {
                if (pair->items.size() == 2) d->dict.emplace_back(pair->items[0], pair->items[1]);
            }
        }
        return d;
    }
    if (name == "torch._utils._rebuild_tensor_v2" || name == "torch._utils._rebuild_tensor") {
        if (a.size() < 4 || a[0]->kind != Kind::Storage || a[1]->kind != Kind::Int) {
            fail(ErrorCode::ParseError, "malformed tensor record");
        }
        auto t = make(Kind::Tensor);
        t->storage = a[0];
        t->dtype = a[0]->dtype;
        t->offset = a[1]->i;
        t->sizes = int_tuple(a[2]);
        t->strides = int_tuple(a[3]);
        if (t->sizes.size() != t->strides.size()) fail(ErrorCode::ParseError, "tensor sizes and strides disagree");
        return t;
    }
    if (name == "torch._utils._rebuild_parameter" || name == "torch._utils._rebuild_parameter_with_state") {
        if (a.empty() || a[0]->kind != Kind::Tensor) fail(ErrorCode::ParseError, "malformed parameter record");
        return a[0];
    }
    auto o = make(Kind::Object);
    o->items = {callable, args};
    return o;
}

Ref Unpickler::load() {
    while (true) {
        const unsigned char op = *take(1);
        switch (op) {
            case 0x80: take(1); break;                           // PROTO
            case 0x95: take(8); break;                           // FRAME
            case 0x2e: return pop();                             // STOP
            case 0x28: marks_.push_back(stack_.size()); break;   // MARK
            case 0x7d: stack_.push_back(make(Kind::Dict)); break;
            case 0x5d: stack_.push_back(make(Kind::List)); break;
            case 0x29: stack_.push_back(make(Kind::Tuple)); break;
            case 0x8f: stack_.push_back(make(Kind::Set)); break;
            case 0x4e: stack_.push_back(make(Kind::None)); break;
            case 0x88:
            case 0x89: {
                auto b = make(Kind::Bool);
                b->i = op == 0x88;
                stack_.push_back(b);
                break;
            }
            case 0x4a: stack_.push_back(make_int(read_le<std::int32_t>(take(4)))); break;
            case 0x4b: stack_.push_back(make_int(*take(1))); break;
            case 0x4d: stack_.push_back(make_int(read_le<std::uint16_t>(take(2)))); break;
            case 0x8a:
            case 0x8b: {
                const std::size_t len = op == 0x8a ? *take(1) : read_le<std::uint32_t>(take(4));
                const unsigned char* p = take(len);
                if (len > 8) {
                    // Kept as raw little-endian bytes; only the legacy magic number needs it.
                    stack_.push_back(make_str(Kind::Bytes, std::string(reinterpret_cast<const char*>(p), len)));
                    break;
                }
                std::uint64_t v = 0;
                for (std::size_t k = 0; k < len; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
                if (len > 0 && len < 8 && (p[len - 1] & 0x80)) v |= ~std::uint64_t{0} << (8 * len);
                stack_.push_back(make_int(static_cast<std::int64_t>(v)));
                break;
            }
            case 0x47: {
                const unsigned char* p = take(8);
                std::uint64_t bits = 0;
                for (int k = 0; k < 8; ++k) bits = (bits << 8) | p[k];
                auto f = make(Kind::Float);
                f->f = std::bit_cast<double>(bits);
                stack_.push_back(f);
                break;
            }
            case 0x58: stack_.push_back(make_str(Kind::Str, take_string(read_le<std::uint32_t>(take(4))))); break;
            case 0x8c: stack_.push_back(make_str(Kind::Str, take_string(*take(1)))); break;
            case 0x8d: stack_.push_back(make_str(Kind::Str, take_string(read_le<std::uint64_t>(take(8))))); break;
            case 0x55: stack_.push_back(make_str(Kind::Str, take_string(*take(1)))); break;
            case 0x54: stack_.push_back(make_str(Kind::Str, take_string(read_le<std::uint32_t>(take(4))))); break;
            case 0x43: stack_.push_back(make_str(Kind::Bytes, take_string(*take(1)))); break;
            case 0x42: stack_.push_back(make_str(Kind::Bytes, take_string(read_le<std::uint32_t>(take(4))))); break;
            case 0x8e: stack_.push_back(make_str(Kind::Bytes, take_string(read_le<std::uint64_t>(take(8))))); break;
            case 0x74: {
                auto t = make(Kind::Tuple);
                t->items = pop_mark();
                stack_.push_back(t);
                break;
            }
            case 0x85:
            case 0x86:
            case 0x87: {
                const std::size_t k = op - 0x84u;
                auto t = make(Kind::Tuple);
                t->items.resize(k);
                for (std::size_t j = k; j-- > 0;) t->items[j] = pop();
                stack_.push_back(t);
                break;
            }
            case 0x6c: {
                auto l = make(Kind::List);
                l->items = pop_mark();
                stack_.push_back(l);
                break;
            }
            case 0x64: {
                auto items = pop_mark();
                auto d = make(Kind::Dict);
                for (std::size_t k = 0; k + 1 < items.size(); k += 2) d->dict.emplace_back(items[k], items[k + 1]);
                stack_.push_back(d);
                break;
            }
            case 0x61: {
                auto v = pop();
                top()->items.push_back(v);
                break;
            }
            case 0x65:
            case 0x90: {
                auto items = pop_mark();
                auto& target = top()->items;
                target.insert(target.end(), items.begin(), items.end());
                break;
            }
            case 0x91: {
                auto s = make(Kind::Set);
                s->items = pop_mark();
                stack_.push_back(s);
                break;
            }
            case 0x73: {
                auto v = pop();
                auto k = pop();
                top()->dict.emplace_back(k, v);
                break;
            }
            case 0x75: {
                auto items = pop_mark();
                auto& d = top()->dict;
                for (std::size_t k = 0; k + 1 < items.size(); k += 2) d.emplace_back(items[k], items[k + 1]);
                break;
            }
            case 0x71: memo_[*take(1)] = top(); break;
            case 0x72: memo_[read_le<std::uint32_t>(take(4))] = top(); break;
            case 0x94: memo_[memo_.size()] = top(); break;
            case 0x68: stack_.push_back(memo_get(*take(1))); break;
            case 0x6a: stack_.push_back(memo_get(read_le<std::uint32_t>(take(4)))); break;
            case 0x63: {
                std::string module = take_line();
                std::string name = take_line();
                stack_.push_back(make_str(Kind::Global, module + "." + name));
                break;
            }
            case 0x93: {
                auto name = pop();
                auto module = pop();
                stack_.push_back(make_str(Kind::Global, module->s + "." + name->s));
                break;
            }
            case 0x52: {
                auto args = pop();
                auto callable = pop();
                stack_.push_back(reduce(callable, args));
                break;
            }
            case 0x81: {
                auto args = pop();
                auto cls = pop();
                stack_.push_back(reduce(cls, args));
                break;
            }
            case 0x92: {
                pop();  // kwargs
                auto args = pop();
                auto cls = pop();
                stack_.push_back(reduce(cls, args));
                break;
            }
            case 0x62: pop(); break;  // BUILD: object state is irrelevant here
            case 0x51: {
                auto pid = pop();
                stack_.push_back(persistent(pid));
                break;
            }
            case 0x30: pop(); break;
            case 0x31: pop_mark(); break;
            case 0x32: stack_.push_back(top()); break;
            default: {
                static const char* hex = "0123456789abcdef";
                fail(ErrorCode::ParseError, std::string("unsupported pickle opcode 0x") + hex[op >> 4] + hex[op & 15]);
            }
        }
    }
}

// Gathers a (possibly strided) tensor view into contiguous little-endian bytes.
ArchiveEntry materialize(const PyObj& t, const std::vector<unsigned char>& storage) {
    ArchiveEntry e;
    e.dtype = t.dtype;
    const std::size_t es = dtype_size(t.dtype);
    std::size_t count = 1;
    for (auto s : t.sizes) {
        if (s < 0) fail(ErrorCode::ParseError, "negative tensor size");
        e.shape.push_back(static_cast<int>(s));
        count *= static_cast<std::size_t>(s);
    }
    e.bytes.resize(count * es);
    if (count == 0) return e;
    const std::size_t rank = t.sizes.size();
    std::vector<std::int64_t> idx(rank, 0);
    for (std::size_t k = 0; k < count; ++k) {
        std::int64_t src = t.offset;
        for (std::size_t d = 0; d < rank; ++d) src += idx[d] * t.strides[d];
        if (src < 0 || static_cast<std::size_t>(src + 1) * es > storage.size()) {
            fail(ErrorCode::ParseError, "tensor view exceeds its storage");
        }
        std::memcpy(&e.bytes[k * es], &storage[static_cast<std::size_t>(src) * es], es);
        for (std::size_t d = rank; d-- > 0;) {
            if (++idx[d] < t.sizes[d]) break;
            idx[d] = 0;
        }
    }
    return e;
}

std::string dict_key(const Ref& k) {
    if (k->kind != Kind::Str) fail(ErrorCode::ParseError, "state dict keys must be strings");
    return k->s;
}

}  // namespace

TorchImport read_torch_checkpoint(const fs::path& path, const std::string& key) {
    if (!fs::exists(path)) fail(ErrorCode::CheckpointMissing, "checkpoint not found: " + path.string());
    auto bytes = read_file(path);

    Ref root;
    std::map<std::string, std::vector<unsigned char>> storages;
    std::function<const std::vector<unsigned char>&(const std::string&)> storage_bytes;

    std::unique_ptr<ZipReader> zip;
    std::string prefix;
    if (ZipReader::looks_like_zip(bytes)) {
        zip = std::make_unique<ZipReader>(std::move(bytes));
        for (const auto& name : zip->names()) {
            const std::string suffix = "data.pkl";
            if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
                prefix = name.substr(0, name.size() - suffix.size());
                break;
            }
        }
        if (!zip->contains(prefix + "data.pkl")) fail(ErrorCode::ParseError, "zip checkpoint has no data.pkl");
        const auto pkl = zip->read(prefix + "data.pkl");
        root = Unpickler(pkl.data(), pkl.size()).load();
        storage_bytes = [&](const std::string& k) -> const std::vector<unsigned char>& {
            auto it = storages.find(k);
            if (it == storages.end()) it = storages.emplace(k, zip->read(prefix + "data/" + k)).first;
            return it->second;
        };
    } else {
        // Legacy stream: magic, protocol, sys info, payload, storage keys, raw storages.
        std::size_t pos = 0;
        auto next = [&]() {
            Unpickler u(bytes.data(), bytes.size(), pos);
            Ref r = u.load();
            pos = u.position();
            return r;
        };
        const Ref magic = next();
        static const std::string legacy_magic = "\x6c\xfc\x9c\x46\xf9\x20\x6a\xa8\x50\x19";
        if (magic->kind != Kind::Bytes || magic->s != legacy_magic) {
            fail(ErrorCode::ParseError, path.string() + " is neither a zip nor a legacy torch checkpoint");
        }
        next();  // protocol version
        next();  // system info
        root = next();
        const Ref keys = next();
        std::map<std::string, DType> dtypes;
        std::function<void(const Ref&)> collect = [&](const Ref& r) {
            if (r->kind == Kind::Tensor) dtypes[r->storage->s] = r->dtype;
            for (const auto& x : r->items) collect(x);
            for (const auto& [k, v] : r->dict) collect(v);
        };
        collect(root);
        for (const auto& k : keys->items) {
            if (k->kind != Kind::Str) fail(ErrorCode::ParseError, "malformed legacy storage key list");
            if (pos + 8 > bytes.size()) fail(ErrorCode::ParseError, "legacy checkpoint truncated");
            const auto numel = read_le<std::int64_t>(&bytes[pos]);
            pos += 8;
            auto it = dtypes.find(k->s);
            const std::size_t es = it == dtypes.end() ? 4 : dtype_size(it->second);
            const std::size_t len = static_cast<std::size_t>(numel) * es;
            if (pos + len > bytes.size()) fail(ErrorCode::ParseError, "legacy checkpoint truncated");
            storages[k->s].assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
            pos += len;
        }
        storage_bytes = [&](const std::string& k) -> const std::vector<unsigned char>& {
            auto it = storages.find(k);
            if (it == storages.end()) fail(ErrorCode::ParseError, "legacy checkpoint lacks storage " + k);
            return it->second;
        };
    }

    if (root->kind != Kind::Dict) fail(ErrorCode::ParseError, "checkpoint root is not a dictionary");
    TorchImport result;
    for (const auto& [k, v] : root->dict) result.top_level_keys.push_back(dict_key(k));

    auto find = [&](const std::string& name) -> Ref {
        for (const auto& [k, v] : root->dict) {
            if (k->kind == Kind::Str && k->s == name) return v;
        }
        return nullptr;
    };
    Ref state;
    if (key == "auto") {
        for (const char* candidate : {"params_ema", "params", "state_dict", "model"}) {
            Ref r = find(candidate);
            if (r && r->kind == Kind::Dict) {
                state = r;
                result.selected_key = candidate;
                break;
            }
        }
        if (!state) state = root;
    } else if (key.empty()) {
        state = root;
    } else {
        state = find(key);
        if (!state || state->kind != Kind::Dict) fail(ErrorCode::ParseError, "checkpoint has no state dict under '" + key + "'");
        result.selected_key = key;
    }

    for (const auto& [k, v] : state->dict) {
        if (v->kind != Kind::Tensor) continue;
        result.archive.add_entry(dict_key(k), materialize(*v, storage_bytes(v->storage->s)));
    }
    if (result.archive.size() == 0) fail(ErrorCode::ParseError, "no tensors found in " + path.string());
    return result;
}

CheckpointMeta infer_checkpoint_meta(const TensorArchive& archive) {
    CheckpointMeta meta;
    auto dim = [&](const std::string& name, std::size_t axis) {
        const auto& shape = archive.at(name).shape;
        if (axis >= shape.size()) fail(ErrorCode::ParseError, name + " has too few dimensions");
        return shape[axis];
    };
    if (archive.contains("conv_first.weight") && archive.contains("conv_last.weight")) {
        GeneratorConfig c;
        c.num_feat = dim("conv_first.weight", 0);
        c.in_channels = dim("conv_first.weight", 1);
        c.out_channels = dim("conv_last.weight", 0);
        c.num_grow_ch = archive.contains("body.0.rdb1.conv1.weight") ? dim("body.0.rdb1.conv1.weight", 0) : c.num_grow_ch;
        int blocks = 0;
        while (archive.contains("body." + std::to_string(blocks) + ".rdb1.conv1.weight")) ++blocks;
        c.num_block = blocks;
        meta.architecture = "rrdbnet";
        meta.config = to_json(c);
    } else if (archive.contains("conv0.weight") && archive.contains("conv1.weight_orig")) {
        DiscriminatorConfig c;
        c.num_feat = dim("conv0.weight", 0);
        c.in_channels = dim("conv0.weight", 1);
        meta.architecture = "unet_discriminator_sn";
        meta.config = to_json(c);
    } else if (archive.contains("features.0.weight")) {
        VggConfig c;
        int index = 0;
        for (std::size_t s = 0; s < 5; ++s) {
            int convs = 0;
            while (archive.contains("features." + std::to_string(index) + ".weight")) {
                c.widths[s] = dim("features." + std::to_string(index) + ".weight", 0);
                ++convs;
                index += 2;
            }
            if (convs == 0) fail(ErrorCode::ParseError, "VGG archive is missing stage " + std::to_string(s + 1));
            c.convs[s] = convs;
            ++index;
        }
        meta.architecture = "vgg19_features";
        meta.config = to_json(c);
    } else {
        fail(ErrorCode::ParseError, "tensor names match no known architecture");
    }
    return meta;
}

namespace {

bool is_torch_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    unsigned char head[4] = {0, 0, 0, 0};
    in.read(reinterpret_cast<char*>(head), 4);
    // zip local header, or a pickle PROTO opcode (legacy stream).
    return (head[0] == 'P' && head[1] == 'K') || head[0] == 0x80;
}

template <typename Net>
LoadReport strict_check(const TensorArchive& archive, Net&& net) {
    return load_archive(archive, net, true);
}

}  // namespace

TensorArchive read_any_checkpoint(const fs::path& path, const std::string& key) {
    if (!fs::exists(path)) fail(ErrorCode::CheckpointMissing, "checkpoint not found: " + path.string());
    if (is_torch_file(path)) return read_torch_checkpoint(path, key).archive;
    return TensorArchive::load(path);
}

ConversionResult convert_checkpoint(const fs::path& input, const fs::path& output, const std::string& key) {
    ConversionResult result;
    result.output = output;
    TensorArchive archive;
    if (is_torch_file(input)) {
        auto imported = read_torch_checkpoint(input, key);
        archive = std::move(imported.archive);
        result.selected_key = imported.selected_key;
    } else {
        archive = TensorArchive::load(input);
    }
    result.meta = infer_checkpoint_meta(archive);
    result.meta.source = input.filename().string() + (result.selected_key.empty() ? "" : ":" + result.selected_key);
    result.meta.is_ema = result.selected_key == "params_ema";

    if (result.meta.architecture == "vgg19_features") {
        TensorArchive features;
        for (const auto& [name, entry] : archive.entries()) {
            if (name.rfind("features.", 0) == 0) features.add_entry(name, entry);
        }
        archive = std::move(features);
        result.report = strict_check(archive, VggFeatureExtractor<float>(vgg_config_from_json(result.meta.config)));
    } else if (result.meta.architecture == "rrdbnet") {
        result.report = strict_check(archive, Generator<float>(generator_config_from_json(result.meta.config)));
    } else {
        result.report =
            strict_check(archive, Discriminator<float>(discriminator_config_from_json(result.meta.config)));
    }
    archive.metadata.clear();
    save_archive(std::move(archive), result.meta, output);
    return result;
}

}  // namespace uwsr::nn
