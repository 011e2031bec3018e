#include "morphgrasp/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "morphgrasp/errors.hpp"

namespace mg::nn {

using nlohmann::json;

namespace {

constexpr char kMagic[9] = "MGCK0001";

void write_doubles(std::ofstream& f, const Tensor& t) {
    f.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * 8));
}

void read_doubles(std::ifstream& f, Tensor& t, const std::string& path) {
    if (!f.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * 8)))
        throw CorruptFile("truncated checkpoint payload in " + path);
}

json shape_json(const Tensor& t) {
    json s = json::array();
    for (int d = 0; d < t.rank(); ++d) s.push_back(t.shape()[d]);
    return s;
}

Tensor tensor_for_shape(const json& s) {
    std::vector<int> dims;
    for (const auto& d : s) dims.push_back(d.get<int>());
    if (dims.empty()) return Tensor::scalar(0.0);
    if (dims.size() == 1) return Tensor::zeros({dims[0]});
    return Tensor::zeros({dims[0], dims[1]});
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void save_checkpoint(const std::string& path, const ParamStore& ps, const AdamState& adam,
                     const json& meta) {
    json header;
    header["schema"] = "morphgrasp-checkpoint/1";
    header["meta"] = meta;
    header["config_hash"] = fnv1a64(meta.dump());

    json params = json::array();
    for (const Parameter* p : ps.all()) {
        json e;
        e["name"] = p->name;
        e["shape"] = shape_json(p->value);
        e["trainable"] = p->trainable;
        params.push_back(e);
    }
    header["params"] = params;

    json adam_entries = json::array();
    for (const Parameter* p : ps.all()) {
        auto it = adam.m.find(p->name);
        if (it == adam.m.end()) continue;
        adam_entries.push_back(p->name);
    }
    header["adam"] = {{"step", adam.step}, {"params", adam_entries}};

    std::string htext = header.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CorruptFile("cannot write checkpoint: " + path);
    f.write(kMagic, 8);
    std::uint64_t hlen = htext.size();
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const Parameter* p : ps.all()) write_doubles(f, p->value);
    for (const auto& name : adam_entries) {
        write_doubles(f, adam.m.at(name.get<std::string>()));
        write_doubles(f, adam.v.at(name.get<std::string>()));
    }
    if (!f) throw CorruptFile("short write on checkpoint: " + path);
}

namespace {

json read_header(std::ifstream& f, const std::string& path) {
    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw CorruptFile("bad checkpoint magic in " + path);
    std::uint64_t hlen = 0;
    if (!f.read(reinterpret_cast<char*>(&hlen), 8))
        throw CorruptFile("truncated checkpoint header in " + path);
    std::string htext(hlen, '\0');
    if (!f.read(htext.data(), static_cast<std::streamsize>(hlen)))
        throw CorruptFile("truncated checkpoint header in " + path);
    json header;
    try {
        header = json::parse(htext);
    } catch (const json::exception& e) {
        throw CorruptFile("bad checkpoint header JSON in " + path + ": " + e.what());
    }
    if (header.value("schema", "") != "morphgrasp-checkpoint/1")
        throw CorruptFile("unsupported checkpoint schema in " + path);
    return header;
}

}  // namespace

json load_checkpoint(const std::string& path, ParamStore& ps, AdamState& adam) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CacheMiss("no checkpoint at " + path);
    json header = read_header(f, path);

    const json& params = header.at("params");
    if (params.size() != ps.size())
        throw ConfigMismatch("checkpoint has " + std::to_string(params.size()) +
                             " parameters, model expects " + std::to_string(ps.size()));
    std::size_t idx = 0;
    for (Parameter* p : ps.all()) {
        const json& e = params[idx++];
        std::string name = e.at("name").get<std::string>();
        if (name != p->name)
            throw ConfigMismatch("checkpoint parameter order mismatch: " + name + " vs " +
                                 p->name);
        Tensor staged = tensor_for_shape(e.at("shape"));
        if (!staged.same_shape(p->value))
            throw ConfigMismatch("checkpoint shape mismatch for " + name + ": file " +
                                 staged.shape_str() + " vs model " + p->value.shape_str());
        read_doubles(f, staged, path);
        p->value = staged;
    }

    adam.m.clear();
    adam.v.clear();
    adam.step = header.at("adam").at("step").get<std::int64_t>();
    for (const auto& name_j : header.at("adam").at("params")) {
        std::string name = name_j.get<std::string>();
        if (!ps.contains(name)) throw ConfigMismatch("checkpoint optimizer state for unknown " + name);
        Tensor m = ps.at(name).value;
        Tensor v = ps.at(name).value;
        read_doubles(f, m, path);
        read_doubles(f, v, path);
        adam.m.emplace(name, std::move(m));
        adam.v.emplace(name, std::move(v));
    }
    return header.at("meta");
}

json read_checkpoint_meta(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CacheMiss("no checkpoint at " + path);
    return read_header(f, path).at("meta");
}

}  // namespace mg::nn
