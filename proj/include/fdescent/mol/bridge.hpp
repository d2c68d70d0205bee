#pragma once
// Client for the chemistry bridge: a child process speaking newline-delimited
// JSON on stdin/stdout. The first line it writes is the capability handshake,
// {"hello":{"dock":bool,...}}. Requests carry an id and responses may arrive in
// any order.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <future>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fdescent/error.hpp"
#include "fdescent/mol/score.hpp"
#include "fdescent/util/log.hpp"
#include "fdescent/util/text.hpp"

namespace fdescent::mol {

class LineTransport {
public:
    virtual ~LineTransport() = default;
    virtual void write_line(const std::string& line) = 0;
    // nullopt at end of stream.
    virtual std::optional<std::string> read_line() = 0;
    virtual void close_write() = 0;
};

class SubprocessTransport : public LineTransport {
public:
    explicit SubprocessTransport(std::vector<std::string> argv) {
        if (argv.empty()) throw ConfigError("bridge_command", "empty command");
        // A dead child must surface as EPIPE, not terminate the process.
        ::signal(SIGPIPE, SIG_IGN);
        int in[2], out[2];
        if (::pipe(in) != 0 || ::pipe(out) != 0) throw TransientError(std::string("bridge: pipe: ") + std::strerror(errno));
        pid_ = ::fork();
        if (pid_ < 0) throw TransientError(std::string("bridge: fork: ") + std::strerror(errno));
        if (pid_ == 0) {
            ::dup2(in[0], STDIN_FILENO);
            ::dup2(out[1], STDOUT_FILENO);
            ::close(in[0]);
            ::close(in[1]);
            ::close(out[0]);
            ::close(out[1]);
            std::vector<char*> args;
            for (auto& a : argv) args.push_back(a.data());
            args.push_back(nullptr);
            ::execvp(args[0], args.data());
            ::_exit(127);
        }
        ::close(in[0]);
        ::close(out[1]);
        to_child_ = in[1];
        from_child_ = out[0];
        ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
        ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
    }

    SubprocessTransport(const SubprocessTransport&) = delete;
    SubprocessTransport& operator=(const SubprocessTransport&) = delete;

    ~SubprocessTransport() override {
        close_write();
        if (from_child_ >= 0) ::close(from_child_);
        if (pid_ > 0) {
            int status = 0;
            for (int i = 0; i < 50; ++i) {
                if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
                ::usleep(20000);
            }
            ::kill(pid_, SIGTERM);
            ::waitpid(pid_, &status, 0);
        }
    }

    void write_line(const std::string& line) override {
        std::lock_guard lock(write_mu_);
        if (to_child_ < 0) throw TransientError("bridge: stdin already closed");
        std::string buf = line + "\n";
        std::size_t off = 0;
        while (off < buf.size()) {
            const auto n = ::write(to_child_, buf.data() + off, buf.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransientError(std::string("bridge: write: ") + std::strerror(errno));
            }
            off += static_cast<std::size_t>(n);
        }
    }

    std::optional<std::string> read_line() override {
        for (;;) {
            if (auto pos = buf_.find('\n'); pos != std::string::npos) {
                std::string line = buf_.substr(0, pos);
                buf_.erase(0, pos + 1);
                return line;
            }
            char chunk[4096];
            const auto n = ::read(from_child_, chunk, sizeof chunk);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) {
                if (buf_.empty()) return std::nullopt;
                return std::exchange(buf_, {});
            }
            buf_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    void close_write() override {
        std::lock_guard lock(write_mu_);
        if (to_child_ >= 0) {
            ::close(to_child_);
            to_child_ = -1;
        }
    }

private:
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::mutex write_mu_;
    std::string buf_;
};

struct BridgeCapabilities {
    bool dock = false;
    nlohmann::json raw;
};

// Thread-safe; any number of requests may be in flight.
class BridgeClient {
public:
    explicit BridgeClient(std::unique_ptr<LineTransport> transport) : transport_(std::move(transport)) {
        auto hello = transport_->read_line();
        if (!hello) throw TransientError("bridge: closed before handshake");
        const auto j = nlohmann::json::parse(*hello, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("hello") || !j["hello"].is_object()) {
            throw ProtocolError("bridge: bad handshake: " + *hello);
        }
        caps_.raw = j["hello"];
        caps_.dock = caps_.raw.value("dock", false);
        reader_ = std::thread([this] { read_loop(); });
    }

    BridgeClient(const BridgeClient&) = delete;
    BridgeClient& operator=(const BridgeClient&) = delete;

    ~BridgeClient() {
        transport_->close_write();
        if (reader_.joinable()) reader_.join();
    }

    const BridgeCapabilities& capabilities() const noexcept { return caps_; }

    std::future<nlohmann::json> submit(const std::string& op, const std::string& smiles, const std::string& target = {}) {
        nlohmann::json req{{"op", op}, {"smiles", smiles}};
        if (!target.empty()) req["target"] = target;
        std::promise<nlohmann::json> p;
        auto fut = p.get_future();
        std::string id;
        {
            std::lock_guard lock(mu_);
            if (closed_) throw TransientError("bridge: connection closed");
            id = "r" + std::to_string(next_id_++);
            pending_.emplace(id, std::move(p));
        }
        req["id"] = id;
        try {
            transport_->write_line(req.dump());
        } catch (...) {
            std::lock_guard lock(mu_);
            pending_.erase(id);
            throw;
        }
        return fut;
    }

    nlohmann::json call(const std::string& op, const std::string& smiles, const std::string& target = {}) {
        return submit(op, smiles, target).get();
    }

    std::size_t in_flight() const {
        std::lock_guard lock(mu_);
        return pending_.size();
    }

private:
    void read_loop() {
        while (auto line = transport_->read_line()) {
            if (util::trim(*line).empty()) continue;
            const auto j = nlohmann::json::parse(*line, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j["id"].is_string()) {
                log::warn("bridge: uncorrelated response: " + *line);
                continue;
            }
            std::promise<nlohmann::json> p;
            {
                std::lock_guard lock(mu_);
                auto it = pending_.find(j["id"].get<std::string>());
                if (it == pending_.end()) {
                    log::warn("bridge: response for unknown id " + j["id"].get<std::string>());
                    continue;
                }
                p = std::move(it->second);
                pending_.erase(it);
            }
            p.set_value(j);
        }
        std::map<std::string, std::promise<nlohmann::json>> orphans;
        {
            std::lock_guard lock(mu_);
            closed_ = true;
            orphans.swap(pending_);
        }
        for (auto& [id, p] : orphans) {
            p.set_exception(std::make_exception_ptr(TransientError("bridge: exited before answering " + id)));
        }
    }

    std::unique_ptr<LineTransport> transport_;
    BridgeCapabilities caps_;
    mutable std::mutex mu_;
    std::map<std::string, std::promise<nlohmann::json>> pending_;
    std::uint64_t next_id_ = 0;
    bool closed_ = false;
    std::thread reader_;
};

namespace detail {
inline std::map<std::string, std::string> descriptor_strings(const nlohmann::json& d) {
    std::map<std::string, std::string> out;
    if (!d.is_object()) return out;
    for (auto it = d.begin(); it != d.end(); ++it) {
        out[it.key()] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
    }
    return out;
}
}  // namespace detail

// Descriptors and QED come from the bridge. Vina comes from the bridge when it
// advertises docking, otherwise from `vina_fallback`.
class BridgeOracle : public MoleculeOracle {
public:
    BridgeOracle(BridgeClient& client, std::string target, MoleculeOracle* vina_fallback = nullptr)
        : client_(client), target_(std::move(target)), fallback_(vina_fallback) {
        if (!client_.capabilities().dock && !fallback_) {
            throw ConfigError("oracle", "bridge cannot dock and no fallback vina source was given");
        }
    }

    OracleResult query(const std::string& smiles) override {
        OracleResult r;
        auto desc = client_.submit("descriptors", smiles);
        std::optional<std::future<nlohmann::json>> dock;
        if (client_.capabilities().dock) dock = client_.submit("dock", smiles, target_);

        const auto d = desc.get();
        if (!d.value("ok", false)) {
            if (dock) dock->get();
            r.reason = d.value("error", std::string("invalid SMILES"));
            if (r.reason.empty()) throw ProtocolError("bridge: ok=false without error text");
            return r;
        }
        if (!d.contains("qed") || !d["qed"].is_number()) throw ProtocolError("bridge: descriptors response lacks qed");
        r.qed = d["qed"].get<double>();
        r.descriptors = detail::descriptor_strings(d.value("descriptors", nlohmann::json::object()));

        if (dock) {
            const auto v = dock->get();
            if (!v.value("ok", false)) {
                r.reason = v.value("error", std::string("docking failed"));
                return r;
            }
            if (!v.contains("vina") || !v["vina"].is_number()) throw ProtocolError("bridge: dock response lacks vina");
            r.vina = v["vina"].get<double>();
        } else {
            const auto f = fallback_->query(smiles);
            if (!f.valid) {
                r.reason = f.reason;
                return r;
            }
            r.vina = f.vina;
        }
        r.valid = true;
        return r;
    }

private:
    BridgeClient& client_;
    std::string target_;
    MoleculeOracle* fallback_;
};

}  // namespace fdescent::mol
