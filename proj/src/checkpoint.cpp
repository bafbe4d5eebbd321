#include "clr/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace clr {

namespace {

constexpr char kMagic[8] = {'C', 'L', 'R', 'C', 'K', 'P', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& is, const std::string& path) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
        throw std::runtime_error("checkpoint truncated: " + path);
    return v;
}

}  // namespace

void save_checkpoint(const ParamSet& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    for (const auto& p : params) {
        write_u32(os, static_cast<std::uint32_t>(p.name.size()));
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_u32(os, static_cast<std::uint32_t>(p.value.rank()));
        for (int i = 0; i < p.value.rank(); ++i)
            write_u32(os, static_cast<std::uint32_t>(p.value.dim(i)));
        os.write(reinterpret_cast<const char*>(p.value.data()),
                 static_cast<std::streamsize>(p.value.numel() * sizeof(float)));
    }
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

ParamSet load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[sizeof(kMagic)];
    if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a CLRCKPT1 checkpoint: " + path);

    ParamSet out;
    while (true) {
        std::uint32_t name_len = 0;
        if (!is.read(reinterpret_cast<char*>(&name_len), 4)) break;  // clean EOF
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len))
            throw std::runtime_error("checkpoint truncated: " + path);
        const std::uint32_t rank = read_u32(is, path);
        std::vector<int> shape;
        for (std::uint32_t i = 0; i < rank; ++i)
            shape.push_back(static_cast<int>(read_u32(is, path)));
        Tensor value(shape);
        if (!is.read(reinterpret_cast<char*>(value.data()),
                     static_cast<std::streamsize>(value.numel() * sizeof(float))))
            throw std::runtime_error("checkpoint truncated: " + path);
        out.add(std::move(name), std::move(value));
    }
    return out;
}

void save_sidecar(const std::map<std::string, std::string>& kv, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open sidecar for writing: " + path);
    for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
}

std::map<std::string, std::string> load_sidecar(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open sidecar: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("malformed sidecar line in " + path + ": " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

}  // namespace clr
