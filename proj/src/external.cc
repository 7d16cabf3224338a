#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "sigeval/model.h"

namespace sigeval {

using json = nlohmann::json;

ExternalEndpoint ExternalEndpoint::parse(std::string_view text) {
  ExternalEndpoint ep;
  std::string rest(text);
  while (!rest.empty()) {
    if (rest.starts_with("cmd=")) {
      // The command runs to the end of the string; it may contain commas.
      ep.command = rest.substr(4);
      break;
    }
    const auto comma = rest.find(',');
    const std::string item = rest.substr(0, comma);
    rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
    const auto eq = item.find('=');
    const std::string key = item.substr(0, eq);
    const std::string value = eq == std::string::npos ? "" : item.substr(eq + 1);
    if (key == "tcp") {
      ep.tcp = value;
    } else if (key == "cap") {
      ep.token_cap = std::stoul(value);
    } else if (key == "timeout") {
      ep.timeout = std::stod(value);
    } else {
      throw std::invalid_argument("unknown external endpoint field '" + key + "'");
    }
  }
  if (ep.command.empty() == ep.tcp.empty()) {
    throw std::invalid_argument("external endpoint needs exactly one of cmd= or tcp=");
  }
  if (ep.token_cap < 1 || !(ep.timeout > 0)) throw std::invalid_argument("bad external endpoint limits");
  return ep;
}

class ExternalIntegrator::Connection {
 public:
  explicit Connection(const ExternalEndpoint& ep) : timeout_(ep.timeout) {
    ::signal(SIGPIPE, SIG_IGN);
    if (!ep.command.empty()) {
      spawn(ep.command);
    } else {
      dial(ep.tcp);
    }
    reader_ = std::thread([this] { read_loop(); });
  }

  ~Connection() {
    if (pid_ > 0) {
      ::close(write_fd_);
      write_fd_ = -1;
      for (int i = 0; i < 40; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
          pid_ = -1;
          break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
      if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
      }
    } else if (read_fd_ >= 0) {
      ::shutdown(read_fd_, SHUT_RDWR);
    }
    stop_ = true;
    reader_.join();
    if (read_fd_ >= 0) ::close(read_fd_);
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  }

  json request(json body) {
    auto slot = std::make_shared<Slot>();
    const std::string id = std::to_string(next_id_++);
    body["id"] = id;
    {
      std::lock_guard lock(mu_);
      if (dead_) throw ModelUnavailable("external model connection is closed: " + dead_reason_);
      pending_[id] = slot;
    }
    send_line(body.dump());
    std::unique_lock lock(mu_);
    const auto deadline =
        std::chrono::steady_clock::now() +
        std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(timeout_));
    if (!slot->cv.wait_until(lock, deadline, [&] { return slot->done; })) {
      pending_.erase(id);
      throw ModelUnavailable("external model did not answer request " + id + " in time");
    }
    if (slot->failure == Failure::kUnavailable) throw ModelUnavailable(slot->message);
    if (slot->failure == Failure::kMalformed) throw MalformedResponse(slot->message);
    return std::move(slot->response);
  }

 private:
  enum class Failure { kNone, kUnavailable, kMalformed };

  struct Slot {
    std::condition_variable cv;
    bool done = false;
    Failure failure = Failure::kNone;
    std::string message;
    json response;
  };

  void spawn(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
      throw ModelUnavailable(std::string("pipe: ") + std::strerror(errno));
    }
    pid_ = ::fork();
    if (pid_ < 0) throw ModelUnavailable(std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    ::fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
  }

  void dial(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos) throw ModelUnavailable("tcp address must be host:port");
    const std::string host = address.substr(0, colon);
    const std::string port = address.substr(colon + 1);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
      throw ModelUnavailable("cannot resolve " + address + ": " + ::gai_strerror(rc));
    }
    int fd = -1;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw ModelUnavailable("cannot connect to " + address);
    read_fd_ = write_fd_ = fd;
  }

  void send_line(const std::string& line) {
    std::lock_guard lock(write_mu_);
    std::string buf = line + "\n";
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
      const ssize_t n = ::write(write_fd_, p, left);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        fail_all("write failed: " + std::string(std::strerror(errno)));
        throw ModelUnavailable("external model connection lost while writing");
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  void read_loop() {
    std::string buffer;
    char chunk[65536];
    while (!stop_) {
      pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, 100);
      if (ready == 0) continue;
      if (ready < 0) {
        if (errno == EINTR) continue;
        fail_all("poll failed");
        return;
      }
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        fail_all(n == 0 ? "external model closed the connection" : "read failed");
        return;
      }
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (auto nl = buffer.find('\n', start); nl != std::string::npos; nl = buffer.find('\n', start)) {
        dispatch(buffer.substr(start, nl - start));
        start = nl + 1;
      }
      buffer.erase(0, start);
    }
  }

  void dispatch(const std::string& line) {
    if (line.empty()) return;
    json msg = json::parse(line, nullptr, false);
    std::lock_guard lock(mu_);
    if (msg.is_discarded() || !msg.is_object()) {
      // The line cannot be attributed to a request, so every waiter fails.
      for (auto& [id, slot] : pending_) finish(*slot, Failure::kMalformed, "unparseable response line");
      pending_.clear();
      return;
    }
    if (!msg.contains("id") || !msg["id"].is_string()) return;
    auto it = pending_.find(msg["id"].get<std::string>());
    if (it == pending_.end()) return;
    it->second->response = std::move(msg);
    finish(*it->second, Failure::kNone, "");
    pending_.erase(it);
  }

  void fail_all(const std::string& reason) {
    std::lock_guard lock(mu_);
    dead_ = true;
    dead_reason_ = reason;
    for (auto& [id, slot] : pending_) finish(*slot, Failure::kUnavailable, reason);
    pending_.clear();
  }

  static void finish(Slot& slot, Failure failure, const std::string& message) {
    slot.done = true;
    slot.failure = failure;
    slot.message = message;
    slot.cv.notify_all();
  }

  double timeout_;
  pid_t pid_ = -1;
  int read_fd_ = -1;
  int write_fd_ = -1;
  std::thread reader_;
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> next_id_{1};
  std::mutex write_mu_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> pending_;
  bool dead_ = false;
  std::string dead_reason_;
};

namespace {

TokenSeq tokens_from(const json& j, std::size_t cap) {
  if (!j.is_array()) throw MalformedResponse("candidate is not a token list");
  if (j.size() > cap) {
    throw ResponseTooLarge("candidate of " + std::to_string(j.size()) + " tokens exceeds the cap of " +
                           std::to_string(cap));
  }
  TokenSeq out;
  out.reserve(j.size());
  for (const auto& t : j) {
    if (!t.is_string()) throw MalformedResponse("token is not a string");
    out.push_back(t.get<std::string>());
  }
  return out;
}

void check_error(const json& response) {
  if (response.contains("error") && !response["error"].is_null()) {
    throw MalformedResponse("external model reported: " + response["error"].dump());
  }
}

}  // namespace

ExternalIntegrator::ExternalIntegrator(ExternalEndpoint endpoint)
    : conn_(std::make_unique<Connection>(endpoint)), endpoint_(std::move(endpoint)) {}

ExternalIntegrator::~ExternalIntegrator() = default;

std::string ExternalIntegrator::name() const {
  return endpoint_.command.empty() ? "external:tcp=" + endpoint_.tcp : "external:cmd=" + endpoint_.command;
}

CandidateList ExternalIntegrator::do_propose(const Expr& problem, const DecodeParams& params) {
  json req = {{"op", "propose"},
              {"prefix", to_prefix(problem)},
              {"k", params.k},
              {"beam", params.beam},
              {"strategy", params.strategy == DecodeStrategy::kBeam ? "beam" : "sample"},
              {"temperature", params.temperature}};
  const json resp = conn_->request(std::move(req));
  check_error(resp);
  if (!resp.contains("candidates") || !resp["candidates"].is_array()) {
    throw MalformedResponse("response has no candidate list");
  }
  CandidateList out;
  for (const auto& c : resp["candidates"]) out.candidates.push_back(tokens_from(c, endpoint_.token_cap));
  if (resp.contains("scores") && !resp["scores"].is_null()) {
    if (!resp["scores"].is_array()) throw MalformedResponse("scores is not a list");
    std::vector<double> scores;
    for (const auto& s : resp["scores"]) {
      if (!s.is_number()) throw MalformedResponse("score is not a number");
      scores.push_back(s.get<double>());
    }
    out.scores = std::move(scores);
  }
  return out;
}

std::optional<double> ExternalIntegrator::score(const Expr& problem, const TokenSeq& candidate) {
  if (candidate.empty()) throw std::invalid_argument("cannot score an empty candidate");
  json req = {{"op", "score"}, {"prefix", to_prefix(problem)}, {"candidate", candidate},
              {"k", 1},        {"beam", 1},                    {"strategy", "beam"},
              {"temperature", 1.0}};
  const json resp = conn_->request(std::move(req));
  check_error(resp);
  if (!resp.contains("scores") || !resp["scores"].is_array() || resp["scores"].empty()) return std::nullopt;
  const json& s = resp["scores"][0];
  if (!s.is_number()) throw MalformedResponse("score is not a number");
  const double p = s.get<double>();
  if (!(p > 0 && p <= 1)) throw MalformedResponse("score outside (0,1]");
  return p;
}

}  // namespace sigeval
