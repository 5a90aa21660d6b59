#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <memory>
#include <optional>
#include <queue>
#include <thread>
#include <vector>

#include "hilfed/error.hpp"
#include "hilfed/federates.hpp"
#include "hilfed/link.hpp"
#include "hilfed/runner.hpp"

namespace hilfed {

namespace {

using Clock = std::chrono::steady_clock;

struct Socket {
    int fd = -1;
    Socket() = default;
    explicit Socket(int f) : fd(f) {}
    Socket(Socket&& o) noexcept : fd(std::exchange(o.fd, -1)) {}
    Socket& operator=(Socket&& o) noexcept {
        reset();
        fd = std::exchange(o.fd, -1);
        return *this;
    }
    ~Socket() { reset(); }
    void reset() {
        if (fd >= 0) ::close(fd);
        fd = -1;
    }
};

[[noreturn]] void socket_failure(const std::string& what) { throw ScenarioError(what + ": " + std::strerror(errno)); }

sockaddr_in resolve(const Endpoint& ep) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(std::uint16_t(ep.port));
    if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) throw ScenarioError("endpoint host must be an IPv4 address: " + ep.host);
    return addr;
}

/// One channel: sender-side pump that releases frames at their delivery time,
/// a loopback TCP connection, and a receiver-side reader.
class ChannelPipe {
public:
    ChannelPipe(Channel channel, const Endpoint& ep) : channel_(channel) {
        Socket listener(::socket(AF_INET, SOCK_STREAM, 0));
        if (listener.fd < 0) socket_failure("socket");
        const int one = 1;
        ::setsockopt(listener.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        auto addr = resolve(ep);
        const std::string where = std::string(channel_name(channel)) + " endpoint " + ep.host + ":" + std::to_string(ep.port);
        if (::bind(listener.fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) socket_failure("bind " + where);
        if (::listen(listener.fd, 1) != 0) socket_failure("listen " + where);
        socklen_t len = sizeof addr;
        ::getsockname(listener.fd, reinterpret_cast<sockaddr*>(&addr), &len);

        writer_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
        if (writer_.fd < 0) socket_failure("socket");
        if (::connect(writer_.fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) socket_failure("connect " + where);
        ::setsockopt(writer_.fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        reader_ = Socket(::accept(listener.fd, nullptr, nullptr));
        if (reader_.fd < 0) socket_failure("accept " + where);
    }

    Channel channel() const { return channel_; }

    void start(std::function<void(std::string)> deliver) {
        pump_ = std::thread([this] { pump(); });
        reader_thread_ = std::thread([this, deliver = std::move(deliver)] { read(deliver); });
    }

    void post(Clock::time_point at, std::string line) {
        {
            std::lock_guard lock(mutex_);
            pending_.push_back({at, std::move(line)});
        }
        cv_.notify_one();
    }

    void stop() {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        cv_.notify_one();
        if (pump_.joinable()) pump_.join();
        ::shutdown(writer_.fd, SHUT_WR);
        if (reader_thread_.joinable()) reader_thread_.join();
    }

private:
    struct Pending {
        Clock::time_point at;
        std::string line;
    };

    void pump() {
        std::unique_lock lock(mutex_);
        while (true) {
            if (stopping_) return;
            if (pending_.empty()) {
                cv_.wait(lock);
                continue;
            }
            // Links are FIFO, so the head is always the earliest delivery.
            const auto at = pending_.front().at;
            if (Clock::now() < at) {
                cv_.wait_until(lock, at);
                continue;
            }
            auto line = std::move(pending_.front().line);
            pending_.pop_front();
            lock.unlock();
            const char* p = line.data();
            std::size_t left = line.size();
            while (left > 0) {
                const auto n = ::send(writer_.fd, p, left, MSG_NOSIGNAL);
                if (n <= 0) break;
                p += n;
                left -= std::size_t(n);
            }
            lock.lock();
        }
    }

    void read(const std::function<void(std::string)>& deliver) {
        std::string buffer;
        char chunk[4096];
        while (true) {
            const auto n = ::recv(reader_.fd, chunk, sizeof chunk, 0);
            if (n <= 0) return;
            buffer.append(chunk, std::size_t(n));
            std::size_t start = 0, nl;
            while ((nl = buffer.find('\n', start)) != std::string::npos) {
                deliver(buffer.substr(start, nl - start + 1));
                start = nl + 1;
            }
            buffer.erase(0, start);
        }
    }

    Channel channel_;
    Socket writer_, reader_;
    std::thread pump_, reader_thread_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Pending> pending_;
    bool stopping_ = false;
};

class RealtimeFederation;

/// Timer heap and inbox of one federate thread.
class Worker final : public FederateContext {
public:
    Worker(RealtimeFederation& fed, FederateId id, Federate& federate) : fed_(fed), id_(id), federate_(federate) {}

    SimTime now() const override;
    void send(Channel channel, const Frame& frame) override;
    void schedule(SimTime at, std::function<void()> action) override {
        {
            std::lock_guard lock(mutex_);
            timers_.push({at, next_seq_++, std::move(action)});
        }
        cv_.notify_one();
    }
    void log_action(std::string_view marker) override;
    void telemetry(std::string_view stream, double value, std::string_view unit) override;

    void deliver(Channel channel, std::string line) {
        {
            std::lock_guard lock(mutex_);
            inbox_.push_back({channel, std::move(line)});
        }
        cv_.notify_one();
    }

    void launch() { thread_ = std::thread([this] { loop(); }); }

    void stop() {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        cv_.notify_one();
        if (thread_.joinable()) thread_.join();
    }

    std::exception_ptr failure() const { return failure_; }

private:
    struct Timer {
        SimTime at;
        std::uint64_t seq;
        std::function<void()> action;
        bool operator>(const Timer& o) const { return at != o.at ? at > o.at : seq > o.seq; }
    };

    void loop();

    RealtimeFederation& fed_;
    FederateId id_;
    Federate& federate_;
    std::thread thread_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::priority_queue<Timer, std::vector<Timer>, std::greater<>> timers_;
    std::deque<std::pair<Channel, std::string>> inbox_;
    std::uint64_t next_seq_ = 0;
    bool stopping_ = false;
    std::optional<SimTime> logical_now_;  // set while a timer action runs
    std::exception_ptr failure_;
};

class RealtimeFederation {
public:
    RealtimeFederation(const LoadedScenario& sc, RunLog& log) : sc_(sc), log_(log), start_(from_seconds(sc.spec.start_s())) {
        if (!(sc.spec.time_scale > 0.0)) throw ScenarioError("time_scale must be positive");
        federates_ = make_federates(sc, ports_);
        for (auto c : kAllChannels) {
            links_.push_back(std::make_unique<Link>(sc.spec.links[std::size_t(c)], channel_seed(sc.spec.seed, c)));
            pipes_.push_back(std::make_unique<ChannelPipe>(c, sc.spec.endpoints[std::size_t(c)]));
        }
        for (int id = 0; id < kFederateCount; ++id)
            if (federates_[std::size_t(id)]) workers_[std::size_t(id)] = std::make_unique<Worker>(*this, FederateId(id), *federates_[std::size_t(id)]);
    }

    void run() {
        wall_start_ = Clock::now();
        for (auto& pipe : pipes_) {
            auto& worker = workers_[std::size_t(channel_receiver(pipe->channel()))];
            const auto channel = pipe->channel();
            pipe->start([&worker, channel](std::string line) {
                if (worker) worker->deliver(channel, std::move(line));
            });
        }
        for (auto& w : workers_)
            if (w) w->launch();
        std::this_thread::sleep_until(wall_at(from_seconds(sc_.spec.end_s())) + std::chrono::milliseconds(20));
        for (auto& w : workers_)
            if (w) w->stop();
        for (auto& pipe : pipes_) pipe->stop();
        for (auto& w : workers_)
            if (w && w->failure()) std::rethrow_exception(w->failure());
    }

    SimTime wall_now() const {
        const double elapsed = std::chrono::duration<double>(Clock::now() - wall_start_).count();
        return start_ + from_seconds(elapsed * sc_.spec.time_scale);
    }

    Clock::time_point wall_at(SimTime t) const {
        const double s = to_seconds(t - start_) / sc_.spec.time_scale;
        return wall_start_ + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(s));
    }

    void send(SimTime now, Channel channel, const Frame& frame) {
        std::string line = encode_frame(frame);
        const std::string_view text(line.data(), line.size() - 1);
        const auto name = channel_name(channel);
        log_.event(now, name, "send", text);
        // Each channel has a single sending federate, so its link is only touched from one thread.
        const auto decision = links_[std::size_t(channel)]->send(now);
        if (decision.outcome == SendOutcome::dropped) {
            log_.event(now, name, "drop", text);
        } else if (decision.outcome == SendOutcome::severed) {
            log_.event(now, name, "sever", text);
        } else {
            pipes_[std::size_t(channel)]->post(wall_at(decision.delivery), std::move(line));
        }
    }

    RunLog& log() { return log_; }
    const LoadedScenario& scenario() const { return sc_; }

private:
    const LoadedScenario& sc_;
    RunLog& log_;
    SimTime start_;
    Clock::time_point wall_start_ = Clock::now();
    LocalPorts ports_;
    std::array<std::unique_ptr<Federate>, kFederateCount> federates_;
    std::vector<std::unique_ptr<Link>> links_;
    std::vector<std::unique_ptr<ChannelPipe>> pipes_;
    std::array<std::unique_ptr<Worker>, kFederateCount> workers_;
};

SimTime Worker::now() const { return logical_now_ ? *logical_now_ : fed_.wall_now(); }
void Worker::send(Channel channel, const Frame& frame) { fed_.send(now(), channel, frame); }
void Worker::log_action(std::string_view marker) { fed_.log().event(now(), federate_name(id_), "action", marker); }
void Worker::telemetry(std::string_view stream, double value, std::string_view unit) { fed_.log().telemetry(now(), stream, value, unit); }

void Worker::loop() {
    try {
        federate_.start(*this);
        std::unique_lock lock(mutex_);
        while (!stopping_) {
            if (!inbox_.empty()) {
                auto [channel, line] = std::move(inbox_.front());
                inbox_.pop_front();
                lock.unlock();
                const SimTime t = fed_.wall_now();
                fed_.log().event(t, channel_name(channel), "recv", std::string_view(line.data(), line.size() - 1));
                try {
                    federate_.on_frame(*this, channel, decode_frame(line));
                } catch (const DecodeError& e) {
                    fed_.log().event(t, channel_name(channel), "decode_error", e.what());
                }
                lock.lock();
                continue;
            }
            if (!timers_.empty()) {
                const SimTime at = timers_.top().at;
                if (fed_.wall_now() >= at) {
                    auto action = std::move(const_cast<Timer&>(timers_.top()).action);
                    timers_.pop();
                    lock.unlock();
                    logical_now_ = at;
                    action();
                    logical_now_.reset();
                    lock.lock();
                    continue;
                }
                cv_.wait_until(lock, fed_.wall_at(at));
            } else {
                cv_.wait(lock);
            }
        }
    } catch (...) {
        failure_ = std::current_exception();
    }
}

}  // namespace

void run_realtime(const LoadedScenario& scenario, RunLog& log) {
    RealtimeFederation federation(scenario, log);
    federation.run();
}

}  // namespace hilfed
