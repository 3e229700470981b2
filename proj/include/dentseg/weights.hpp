#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dentseg/errors.hpp"
#include "dentseg/tensor.hpp"

namespace dentseg {

/// Named-tensor container: 8-byte little-endian manifest length, UTF-8 JSON
/// manifest [{"name","shape","offset"}...], then a contiguous little-endian
/// float32 payload. Offsets are in bytes from the start of the payload.
class WeightArchive {
public:
    struct Entry {
        std::vector<int> shape;
        std::vector<float> values;
    };

    bool has(const std::string& name) const { return entries_.count(name) != 0; }

    const Entry& get(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw MissingWeight(name);
        return it->second;
    }

    void put(const std::string& name, std::vector<int> shape, std::vector<float> values) {
        std::size_t count = 1;
        for (int d : shape) count *= static_cast<std::size_t>(d);
        if (count != values.size())
            throw WeightShapeMismatch(name + ": shape product " + std::to_string(count) +
                                      " vs " + std::to_string(values.size()) + " values");
        if (entries_.count(name)) throw CorruptArchive("duplicate tensor name '" + name + "'");
        order_.push_back(name);
        entries_[name] = Entry{std::move(shape), std::move(values)};
    }

    const std::vector<std::string>& names() const { return order_; }

    void save(const std::filesystem::path& path) const {
        nlohmann::json manifest = nlohmann::json::array();
        std::uint64_t offset = 0;
        for (const auto& name : order_) {
            const Entry& e = entries_.at(name);
            manifest.push_back({{"name", name}, {"shape", e.shape}, {"offset", offset}});
            offset += e.values.size() * 4;
        }
        const std::string mtext = manifest.dump();
        std::ofstream f(path, std::ios::binary);
        if (!f) throw CorruptArchive("cannot open '" + path.string() + "' for writing");
        std::uint64_t mlen = mtext.size();
        char hdr[8];
        for (int i = 0; i < 8; ++i) hdr[i] = static_cast<char>((mlen >> (8 * i)) & 0xff);
        f.write(hdr, 8);
        f.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
        for (const auto& name : order_) {
            const Entry& e = entries_.at(name);
            f.write(reinterpret_cast<const char*>(e.values.data()),
                    static_cast<std::streamsize>(e.values.size() * 4));
        }
        if (!f) throw CorruptArchive("write failed for '" + path.string() + "'");
    }

    static WeightArchive load(const std::filesystem::path& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw CorruptArchive("cannot open '" + path.string() + "'");
        char hdr[8];
        f.read(hdr, 8);
        if (f.gcount() != 8) throw CorruptArchive("file shorter than the 8-byte header");
        std::uint64_t mlen = 0;
        for (int i = 0; i < 8; ++i)
            mlen |= static_cast<std::uint64_t>(static_cast<unsigned char>(hdr[i])) << (8 * i);
        std::string mtext(mlen, '\0');
        f.read(mtext.data(), static_cast<std::streamsize>(mlen));
        if (static_cast<std::uint64_t>(f.gcount()) != mlen)
            throw CorruptArchive("manifest truncated");
        nlohmann::json manifest;
        try {
            manifest = nlohmann::json::parse(mtext);
        } catch (const nlohmann::json::exception& e) {
            throw CorruptArchive(std::string("manifest is not valid JSON: ") + e.what());
        }
        if (!manifest.is_array()) throw CorruptArchive("manifest is not a JSON array");

        std::vector<char> payload(std::istreambuf_iterator<char>(f), {});
        WeightArchive archive;
        for (const auto& item : manifest) {
            if (!item.contains("name") || !item.contains("shape") || !item.contains("offset"))
                throw CorruptArchive("manifest entry missing name/shape/offset");
            const std::string name = item["name"].get<std::string>();
            const std::vector<int> shape = item["shape"].get<std::vector<int>>();
            const std::uint64_t offset = item["offset"].get<std::uint64_t>();
            std::size_t count = 1;
            for (int d : shape) {
                if (d <= 0) throw CorruptArchive("non-positive dimension in '" + name + "'");
                count *= static_cast<std::size_t>(d);
            }
            if (offset + count * 4 > payload.size())
                throw TruncatedPayload("'" + name + "' needs " + std::to_string(count * 4) +
                                       " bytes at offset " + std::to_string(offset) +
                                       ", payload holds " + std::to_string(payload.size()));
            std::vector<float> values(count);
            std::memcpy(values.data(), payload.data() + offset, count * 4);
            archive.put(name, shape, std::move(values));
        }
        return archive;
    }

private:
    std::vector<std::string> order_;
    std::map<std::string, Entry> entries_;
};

} // namespace dentseg
