#include "nsoinn/synthetic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <ostream>
#include <utility>

#include "nsoinn/error.hpp"
#include "random.hpp"

namespace nsoinn {
namespace {

constexpr std::array<AttackCount, 23> kTrainCounts = {{
    {"normal", 67343},      {"neptune", 41214},     {"smurf", 2646},      {"back", 956},
    {"teardrop", 892},      {"pod", 201},           {"land", 18},         {"satan", 3633},
    {"ipsweep", 3599},      {"portsweep", 2931},    {"nmap", 1493},       {"warezclient", 890},
    {"guess_passwd", 53},   {"warezmaster", 20},    {"imap", 11},         {"ftp_write", 8},
    {"multihop", 7},        {"phf", 4},             {"spy", 2},           {"buffer_overflow", 30},
    {"rootkit", 10},        {"loadmodule", 9},      {"perl", 3},
}};

constexpr std::array<AttackCount, 38> kTestCounts = {{
    {"normal", 9711},        {"neptune", 4657},     {"smurf", 665},       {"back", 359},
    {"teardrop", 12},        {"pod", 41},           {"land", 7},          {"apache2", 737},
    {"processtable", 685},   {"mailbomb", 293},     {"udpstorm", 2},      {"satan", 735},
    {"ipsweep", 141},        {"portsweep", 157},    {"nmap", 73},         {"mscan", 996},
    {"saint", 319},          {"guess_passwd", 1231}, {"warezmaster", 944}, {"snmpguess", 331},
    {"snmpgetattack", 178},  {"multihop", 18},      {"named", 17},        {"ftp_write", 3},
    {"imap", 1},             {"phf", 2},            {"sendmail", 14},     {"xlock", 9},
    {"xsnoop", 4},           {"worm", 2},           {"buffer_overflow", 20}, {"rootkit", 13},
    {"loadmodule", 2},       {"perl", 2},           {"httptunnel", 133},  {"ps", 15},
    {"sqlattack", 2},        {"xterm", 13},
}};

// TCP services seen in NSL-KDD; scans and floods spread over these.
constexpr std::array<std::string_view, 63> kTcpServices = {
    "aol",       "auth",       "bgp",       "courier",   "csnet_ns",   "ctf",      "daytime",
    "discard",   "domain",     "echo",      "efs",       "exec",       "finger",   "ftp",
    "ftp_data",  "gopher",     "harvest",   "hostnames", "http",       "http_2784", "http_443",
    "http_8001", "imap4",      "IRC",       "iso_tsap",  "klogin",     "kshell",   "ldap",
    "link",      "login",      "mtp",       "name",      "netbios_dgm", "netbios_ns", "netbios_ssn",
    "netstat",   "nnsp",       "nntp",      "other",     "pm_dump",    "pop_2",    "pop_3",
    "printer",   "private",    "remote_job", "rje",      "shell",      "smtp",     "sql_net",
    "ssh",       "sunrpc",     "supdup",    "systat",    "telnet",     "time",     "uucp",
    "uucp_path", "vmnet",      "whois",     "X11",       "Z39_50",     "urh_i",    "red_i",
};

using Weighted = std::vector<std::pair<std::string_view, double>>;

// Heavy-tailed byte counts and durations: 0 with probability p_zero, else
// round(10^N(log_mu, log_sd)).
struct Amount {
  double p_zero = 1.0;
  double log_mu = 0.0;
  double log_sd = 0.3;
};

struct Mode {
  double train = 1.0;  // relative weight inside the label, per file
  double test = 1.0;
  std::string_view protocol = "tcp";
  Weighted services;  // empty: any TCP service
  Weighted flags = {{"SF", 1.0}};
  Amount duration{};
  Amount src{};
  Amount dst{};
  double logged_in = 0.0;
  double count = 1.0;
  double srv_count = 1.0;
  double serror = 0.0;
  double rerror = 0.0;
  double same_srv = 1.0;
  double diff_srv = 0.0;
  double srv_diff_host = 0.0;
  double dh_count = 255.0;
  double dh_srv_count = 255.0;
  double dh_same_srv = 1.0;
  double dh_diff_srv = 0.0;
  double dh_same_src_port = 0.0;
  double dh_srv_diff_host = 0.0;
  double dh_serror = 0.0;
  double dh_rerror = 0.0;
  // Poisson means for the content attributes.
  double hot = 0.0;
  double failed_logins = 0.0;
  double compromised = 0.0;
  double root_shell = 0.0;
  double su = 0.0;
  double num_root = 0.0;
  double file_creations = 0.0;
  double shells = 0.0;
  double access_files = 0.0;
  int wrong_fragment = 0;
  double land = 0.0;
  double urgent = 0.0;
  double guest = 0.0;
};

Amount bytes(double log_mu, double log_sd = 0.3, double p_zero = 0.0) { return {p_zero, log_mu, log_sd}; }

std::vector<Mode> modes_for(std::string_view label) {
  // Normal traffic. The last three modes are (nearly) absent from the test
  // file, which is what the initial model trained on the test file misses.
  if (label == "normal") {
    return {
        {.train = 0.36, .test = 0.31, .services = {{"http", 1}}, .src = bytes(2.4, 0.2),
         .dst = bytes(3.5, 0.5, 0.02), .logged_in = 0.98, .count = 6, .srv_count = 9,
         .dh_count = 120, .dh_srv_count = 250, .dh_same_src_port = 0.03},
        {.train = 0.10, .test = 0.09, .services = {{"smtp", 1}}, .src = bytes(3.0, 0.4),
         .dst = bytes(2.5, 0.2), .logged_in = 0.95, .count = 2, .srv_count = 2,
         .dh_count = 150, .dh_srv_count = 120, .dh_same_srv = 0.7, .dh_diff_srv = 0.05},
        {.train = 0.08, .test = 0.07, .services = {{"ftp_data", 1}}, .src = bytes(3.3, 0.8),
         .dst = bytes(0, 0.3, 0.9), .logged_in = 1.0, .count = 3, .srv_count = 4, .dh_count = 60,
         .dh_srv_count = 40, .dh_same_srv = 0.6, .dh_same_src_port = 0.5},
        {.train = 0.10, .test = 0.08, .protocol = "udp", .services = {{"domain_u", 1}},
         .src = bytes(1.65, 0.1), .dst = bytes(1.9, 0.15), .count = 80, .srv_count = 80,
         .dh_count = 255, .dh_srv_count = 250},
        {.train = 0.05, .test = 0.10, .protocol = "udp",
         .services = {{"private", 0.75}, {"ntp_u", 0.2}, {"tftp_u", 0.05}}, .src = bytes(1.7, 0.05), .dst = bytes(1.7, 0.05), .count = 1, .srv_count = 1,
         .dh_count = 255, .dh_srv_count = 3, .dh_same_srv = 0.01, .dh_diff_srv = 0.6},
        {.train = 0.03, .test = 0.04, .protocol = "icmp",
         .services = {{"ecr_i", 0.5}, {"eco_i", 0.3}, {"tim_i", 0.1}, {"urp_i", 0.1}},
         .src = bytes(1.5, 0.3), .count = 1, .srv_count = 2, .dh_count = 50, .dh_srv_count = 20,
         .dh_same_srv = 0.4, .dh_same_src_port = 0.4},
        {.train = 0.04, .test = 0.12,
         .services = {{"telnet", 0.4}, {"ftp", 0.3}, {"ssh", 0.1}, {"login", 0.1}, {"pop_3", 0.1}},
         .duration = bytes(2.3, 0.6, 0.2), .src = bytes(2.6, 0.5), .dst = bytes(3.2, 0.6),
         .logged_in = 1.0, .count = 1, .srv_count = 1, .dh_count = 30, .dh_srv_count = 10,
         .dh_same_srv = 0.3, .dh_diff_srv = 0.1, .hot = 0.8, .file_creations = 0.1,
         .access_files = 0.05},
        {.train = 0.06, .test = 0.07,
         .services = {{"other", 0.5}, {"auth", 0.2}, {"finger", 0.2}, {"IRC", 0.1}},
         .flags = {{"SF", 0.9}, {"RSTO", 0.05}, {"S1", 0.05}}, .src = bytes(1.8, 0.5, 0.2),
         .dst = bytes(2.0, 0.7, 0.3), .logged_in = 0.5, .count = 2, .srv_count = 2, .dh_count = 200,
         .dh_srv_count = 30, .dh_same_srv = 0.2, .dh_diff_srv = 0.05},
        {.train = 0.07, .test = 0.003, .services = {{"http", 0.4}, {"other", 0.3}, {"private", 0.3}},
         .flags = {{"REJ", 1}}, .count = 2, .srv_count = 2, .rerror = 1.0, .dh_count = 255,
         .dh_srv_count = 40, .dh_same_srv = 0.15, .dh_rerror = 0.3},
        {.train = 0.06, .test = 0.0, .services = {{"ftp_data", 1}}, .duration = bytes(2.0, 0.4),
         .src = bytes(5.5, 0.4), .logged_in = 1.0, .count = 1, .srv_count = 1, .dh_count = 10,
         .dh_srv_count = 10, .dh_same_src_port = 1.0},
        {.train = 0.05, .test = 0.004, .services = {{"http", 0.6}, {"http_443", 0.4}},
         .flags = {{"S1", 0.5}, {"RSTO", 0.3}, {"S3", 0.2}}, .duration = bytes(1.0, 0.5, 0.5),
         .src = bytes(2.2, 0.3), .dst = bytes(3.0, 0.5, 0.3), .logged_in = 1.0, .count = 20,
         .srv_count = 20, .dh_count = 255, .dh_srv_count = 200, .dh_same_srv = 0.8},
    };
  }

  // DoS
  if (label == "neptune") {
    Mode syn{.train = 0.8, .test = 0.9, .services = {}, .flags = {{"S0", 0.95}, {"SH", 0.05}},
             .count = 150, .srv_count = 12, .serror = 1.0, .same_srv = 0.08, .diff_srv = 0.06,
             .dh_srv_count = 15, .dh_same_srv = 0.06, .dh_diff_srv = 0.07, .dh_serror = 1.0};
    Mode rej = syn;
    rej.train = 0.2;
    rej.test = 0.1;
    rej.flags = {{"REJ", 1}};
    rej.serror = 0.0;
    rej.rerror = 1.0;
    rej.dh_serror = 0.0;
    rej.dh_rerror = 1.0;
    rej.count = 120;
    return {syn, rej};
  }
  if (label == "smurf") {
    return {{.protocol = "icmp", .services = {{"ecr_i", 1}}, .src = bytes(3.01, 0.01),
             .count = 505, .srv_count = 505, .dh_srv_count = 255, .dh_same_src_port = 1.0}};
  }
  if (label == "back") {
    return {{.services = {{"http", 1}}, .flags = {{"SF", 0.8}, {"RSTR", 0.1}, {"S1", 0.1}},
             .src = bytes(4.74, 0.005), .dst = bytes(3.92, 0.05, 0.05), .logged_in = 1.0,
             .count = 5, .srv_count = 5, .dh_count = 150, .dh_srv_count = 255, .hot = 2.0,
             .compromised = 1.0}};
  }
  if (label == "teardrop") {
    return {{.protocol = "udp", .services = {{"private", 1}}, .src = bytes(1.45, 0.01), .count = 60,
             .srv_count = 60, .dh_srv_count = 50, .dh_same_srv = 0.2, .dh_diff_srv = 0.05,
             .wrong_fragment = 3}};
  }
  if (label == "pod") {
    return {{.protocol = "icmp", .services = {{"ecr_i", 0.8}, {"tim_i", 0.2}}, .src = bytes(3.17, 0.01),
             .count = 2, .srv_count = 2, .dh_count = 40, .dh_srv_count = 40,
             .dh_same_src_port = 0.8, .wrong_fragment = 1}};
  }
  if (label == "land") {
    return {{.services = {{"finger", 0.3}, {"telnet", 0.3}, {"http", 0.4}}, .flags = {{"S0", 1}},
             .count = 1, .srv_count = 1, .serror = 1.0, .dh_count = 1, .dh_srv_count = 1,
             .dh_same_src_port = 1.0, .dh_serror = 1.0, .land = 1.0}};
  }
  if (label == "apache2") {
    return {{.services = {{"http", 1}}, .flags = {{"SF", 0.4}, {"RSTR", 0.3}, {"S3", 0.3}},
             .src = bytes(2.6, 0.2), .logged_in = 0.7, .count = 200, .srv_count = 200,
             .serror = 0.3, .rerror = 0.3, .dh_srv_count = 255, .dh_serror = 0.3, .dh_rerror = 0.4,
             .hot = 0.3}};
  }
  if (label == "processtable") {
    return {{.services = {}, .flags = {{"SF", 0.7}, {"S2", 0.3}}, .duration = bytes(3.4, 0.3),
             .count = 1, .srv_count = 1, .dh_srv_count = 2, .dh_same_srv = 0.01,
             .dh_diff_srv = 0.1}};
  }
  if (label == "mailbomb") {
    return {{.services = {{"smtp", 1}}, .src = bytes(3.9, 0.05), .dst = bytes(2.4, 0.05),
             .logged_in = 1.0, .count = 3, .srv_count = 3, .dh_count = 1, .dh_srv_count = 255,
             .dh_same_src_port = 0.9}};
  }
  if (label == "udpstorm") {
    return {{.protocol = "udp", .services = {{"private", 1}}, .src = bytes(1.45, 0.01), .count = 1,
             .srv_count = 1, .dh_count = 2, .dh_srv_count = 2}};
  }

  // Probe
  if (label == "satan") {
    return {{.services = {}, .flags = {{"REJ", 0.7}, {"S0", 0.1}, {"SF", 0.1}, {"RSTO", 0.1}},
             .src = bytes(1.0, 0.5, 0.8), .count = 100, .srv_count = 3, .rerror = 0.8,
             .same_srv = 0.05, .diff_srv = 0.7, .dh_srv_count = 5, .dh_same_srv = 0.02,
             .dh_diff_srv = 0.5, .dh_rerror = 0.8}};
  }
  if (label == "ipsweep") {
    return {{.protocol = "icmp", .services = {{"eco_i", 0.9}, {"ecr_i", 0.1}}, .src = bytes(1.26, 0.02),
             .count = 1, .srv_count = 15, .srv_diff_host = 1.0, .dh_count = 40, .dh_srv_count = 40,
             .dh_same_src_port = 1.0, .dh_srv_diff_host = 0.5}};
  }
  if (label == "portsweep") {
    return {{.services = {}, .flags = {{"RSTR", 0.6}, {"REJ", 0.3}, {"SF", 0.1}},
             .duration = bytes(3.0, 0.8, 0.6), .count = 1, .srv_count = 1, .rerror = 0.6,
             .dh_srv_count = 2, .dh_same_srv = 0.01, .dh_diff_srv = 0.9, .dh_same_src_port = 0.9,
             .dh_rerror = 0.5}};
  }
  if (label == "nmap") {
    return {
        {.services = {{"private", 0.7}, {"other", 0.3}}, .flags = {{"SF", 0.4}, {"S0", 0.4}, {"REJ", 0.2}},
         .count = 1, .srv_count = 1, .dh_srv_count = 1, .dh_same_srv = 0.01, .dh_diff_srv = 1.0,
         .dh_same_src_port = 1.0},
        {.protocol = "udp", .services = {{"private", 1}}, .count = 1, .srv_count = 1,
         .dh_srv_count = 1, .dh_same_srv = 0.01, .dh_diff_srv = 1.0, .dh_same_src_port = 1.0},
        {.protocol = "icmp", .services = {{"eco_i", 1}}, .src = bytes(0.9, 0.05), .count = 1,
         .srv_count = 1, .dh_srv_count = 1, .dh_same_srv = 0.01, .dh_diff_srv = 1.0,
         .dh_same_src_port = 1.0},
    };
  }
  if (label == "mscan") {
    return {{.services = {}, .flags = {{"SF", 0.4}, {"REJ", 0.3}, {"S0", 0.3}}, .count = 5,
             .srv_count = 5, .serror = 0.3, .rerror = 0.3, .dh_srv_count = 200, .dh_same_srv = 0.1,
             .dh_diff_srv = 0.2, .dh_srv_diff_host = 0.8, .dh_serror = 0.3, .dh_rerror = 0.3}};
  }
  if (label == "saint") {
    return {{.services = {}, .flags = {{"REJ", 0.6}, {"SF", 0.3}, {"S0", 0.1}}, .count = 50,
             .srv_count = 4, .rerror = 0.6, .same_srv = 0.1, .diff_srv = 0.5, .dh_srv_count = 20,
             .dh_same_srv = 0.1, .dh_diff_srv = 0.4, .dh_rerror = 0.6}};
  }

  // R2L
  if (label == "warezclient") {
    return {{.services = {{"ftp_data", 0.7}, {"ftp", 0.3}}, .duration = bytes(2.5, 0.6, 0.5),
             .src = bytes(5.0, 0.6), .logged_in = 1.0, .count = 1, .srv_count = 1, .dh_count = 20,
             .dh_srv_count = 20, .dh_same_src_port = 0.6, .hot = 3.0, .guest = 0.5}};
  }
  if (label == "guess_passwd") {
    return {{.services = {{"telnet", 0.6}, {"pop_3", 0.4}}, .flags = {{"SF", 0.6}, {"RSTO", 0.4}},
             .src = bytes(1.9, 0.2), .dst = bytes(2.1, 0.2), .count = 1, .srv_count = 1,
             .dh_srv_count = 255, .dh_same_srv = 1.0, .failed_logins = 1.0}};
  }
  if (label == "warezmaster") {
    return {{.services = {{"ftp", 0.8}, {"ftp_data", 0.2}}, .duration = bytes(2.5, 0.5, 0.1),
             .src = bytes(1.5, 0.3), .dst = bytes(5.5, 0.4), .logged_in = 1.0, .count = 1,
             .srv_count = 1, .dh_srv_count = 1, .dh_same_srv = 0.01, .hot = 1.0, .guest = 0.5}};
  }
  if (label == "imap") {
    return {{.services = {{"imap4", 1}}, .flags = {{"S0", 0.5}, {"SF", 0.5}}, .src = bytes(2.8, 0.4, 0.4),
             .count = 2, .srv_count = 2, .serror = 0.5, .dh_count = 5, .dh_srv_count = 5,
             .dh_serror = 0.5}};
  }
  if (label == "ftp_write") {
    return {{.services = {{"ftp", 0.5}, {"ftp_data", 0.5}}, .duration = bytes(1.5, 0.5, 0.3),
             .src = bytes(2.5, 0.4), .dst = bytes(2.8, 0.5, 0.3), .logged_in = 1.0, .dh_count = 5,
             .dh_srv_count = 5, .hot = 1.0, .file_creations = 1.0}};
  }
  if (label == "multihop") {
    return {{.services = {{"telnet", 0.7}, {"ftp_data", 0.3}}, .duration = bytes(3.0, 0.4),
             .src = bytes(3.0, 0.4), .dst = bytes(3.5, 0.4), .logged_in = 1.0, .dh_count = 3,
             .dh_srv_count = 3, .hot = 2.0, .file_creations = 0.5, .access_files = 0.5}};
  }
  if (label == "phf") {
    return {{.services = {{"http", 1}}, .src = bytes(2.7, 0.1), .dst = bytes(3.6, 0.2),
             .logged_in = 1.0, .count = 1, .srv_count = 1, .dh_count = 3, .dh_srv_count = 3,
             .hot = 1.0}};
  }
  if (label == "spy") {
    return {{.services = {{"telnet", 1}}, .duration = bytes(4.2, 0.2), .src = bytes(3.2, 0.3),
             .dst = bytes(4.0, 0.3), .logged_in = 1.0, .dh_count = 2, .dh_srv_count = 2,
             .hot = 3.0, .compromised = 1.0, .file_creations = 1.0}};
  }
  if (label == "snmpguess") {
    return {{.protocol = "udp", .services = {{"private", 1}}, .src = bytes(1.6, 0.05), .count = 300,
             .srv_count = 300, .dh_srv_count = 255, .dh_same_srv = 1.0, .dh_same_src_port = 0.02}};
  }
  if (label == "snmpgetattack") {
    // Indistinguishable from the normal SNMP/NTP mode by construction.
    return {{.protocol = "udp", .services = {{"private", 0.8}, {"ntp_u", 0.2}}, .src = bytes(1.7, 0.05),
             .dst = bytes(1.7, 0.05), .count = 1, .srv_count = 1, .dh_srv_count = 3,
             .dh_same_srv = 0.01, .dh_diff_srv = 0.6}};
  }
  if (label == "named") {
    return {{.services = {{"domain", 1}}, .duration = bytes(1.0, 0.5, 0.5), .src = bytes(3.2, 0.3),
             .dst = bytes(2.0, 0.3), .logged_in = 1.0, .dh_count = 5, .dh_srv_count = 5,
             .hot = 1.0, .root_shell = 0.3}};
  }
  if (label == "sendmail") {
    return {{.services = {{"smtp", 1}}, .src = bytes(3.3, 0.3), .dst = bytes(2.5, 0.2),
             .logged_in = 1.0, .dh_count = 3, .dh_srv_count = 3, .hot = 1.0, .root_shell = 0.3}};
  }
  if (label == "xlock" || label == "xsnoop") {
    return {{.services = {{"X11", 1}}, .duration = bytes(2.0, 0.5, 0.3), .src = bytes(2.0, 0.3),
             .dst = bytes(3.0, 0.5), .logged_in = label == "xlock" ? 1.0 : 0.0, .dh_count = 2,
             .dh_srv_count = 2, .hot = label == "xlock" ? 1.0 : 0.0}};
  }
  if (label == "worm") {
    return {{.services = {{"other", 1}}, .flags = {{"S0", 0.5}, {"SF", 0.5}}, .src = bytes(2.0, 0.3, 0.3),
             .count = 30, .srv_count = 30, .serror = 0.5, .dh_srv_count = 50,
             .dh_srv_diff_host = 0.6}};
  }

  // U2R
  if (label == "buffer_overflow" || label == "loadmodule" || label == "perl" || label == "ps" ||
      label == "sqlattack" || label == "xterm") {
    Mode m{.services = {{"telnet", 0.8}, {"ftp_data", 0.2}}, .duration = bytes(2.2, 0.5, 0.2),
           .src = bytes(3.0, 0.5), .dst = bytes(3.5, 0.5), .logged_in = 1.0, .dh_count = 3,
           .dh_srv_count = 3, .hot = 2.0, .compromised = 1.0, .root_shell = 0.9,
           .num_root = 1.0, .file_creations = 1.0, .shells = 0.3};
    if (label == "perl" || label == "loadmodule") m.su = 0.3;
    if (label == "sqlattack") m.services = {{"sql_net", 1}};
    return {m};
  }
  if (label == "rootkit") {
    return {
        {.services = {{"telnet", 1}}, .duration = bytes(2.5, 0.5, 0.2), .src = bytes(2.8, 0.5),
         .dst = bytes(3.0, 0.5), .logged_in = 1.0, .dh_count = 3, .dh_srv_count = 3, .hot = 2.0,
         .root_shell = 0.5, .file_creations = 1.0},
        {.protocol = "udp", .services = {{"other", 1}}, .src = bytes(2.0, 0.3), .dh_count = 3,
         .dh_srv_count = 3},
    };
  }
  if (label == "httptunnel") {
    return {{.services = {{"http", 0.3}, {"ftp", 0.3}, {"telnet", 0.4}}, .duration = bytes(3.5, 0.3),
             .src = bytes(2.5, 0.5), .dst = bytes(2.5, 0.5), .logged_in = 1.0, .dh_count = 2,
             .dh_srv_count = 2, .hot = 0.5, .root_shell = 0.3}};
  }
  throw InvariantError("synthetic generator has no profile for '" + std::string(label) + "'");
}

std::string_view pick(const Weighted& items, detail::Rng& rng) {
  double total = 0.0;
  for (const auto& [name, w] : items) total += w;
  double u = rng.uniform() * total;
  for (const auto& [name, w] : items) {
    if (u < w) return name;
    u -= w;
  }
  return items.back().first;
}

long long amount(const Amount& a, detail::Rng& rng) {
  if (rng.chance(a.p_zero)) return 0;
  return std::llround(std::pow(10.0, rng.normal(a.log_mu, a.log_sd)));
}

long long poisson(double mean, detail::Rng& rng) {
  if (mean <= 0.0) return 0;
  const double limit = std::exp(-mean);
  long long k = 0;
  double p = rng.uniform();
  while (p > limit) {
    ++k;
    p *= rng.uniform();
  }
  return k;
}

long long around(double mean, double cap, detail::Rng& rng) {
  const double v = rng.normal(mean, 0.2 * mean + 0.5);
  return std::llround(std::clamp(v, 0.0, cap));
}

std::string rate(double level, detail::Rng& rng) {
  const double v = std::clamp(rng.normal(level, 0.05), 0.0, 1.0);
  return fmt::format("{:.2f}", v);
}

RawRecord make_record(const Mode& m, std::string_view label, detail::Rng& rng) {
  RawRecord r;
  auto& a = r.attributes;
  a.reserve(kAttributeCount);
  const auto num = [&a](long long v) { a.push_back(std::to_string(v)); };

  num(amount(m.duration, rng));
  a.emplace_back(m.protocol);
  a.emplace_back(m.services.empty() ? kTcpServices[rng.below(kTcpServices.size())]
                                    : pick(m.services, rng));
  a.emplace_back(pick(m.flags, rng));
  num(amount(m.src, rng));
  num(amount(m.dst, rng));
  num(rng.chance(m.land) ? 1 : 0);
  num(m.wrong_fragment);
  num(poisson(m.urgent, rng));
  num(poisson(m.hot, rng));
  num(std::min<long long>(poisson(m.failed_logins, rng), 5));
  num(rng.chance(m.logged_in) ? 1 : 0);
  num(poisson(m.compromised, rng));
  num(rng.chance(m.root_shell) ? 1 : 0);
  num(rng.chance(m.su) ? 1 : 0);
  num(poisson(m.num_root, rng));
  num(poisson(m.file_creations, rng));
  num(std::min<long long>(poisson(m.shells, rng), 2));
  num(poisson(m.access_files, rng));
  num(0);  // num_outbound_cmds is constant in NSL-KDD
  num(0);  // is_host_login
  num(rng.chance(m.guest) ? 1 : 0);
  num(around(m.count, 511, rng));
  num(around(m.srv_count, 511, rng));
  const auto serror = rate(m.serror, rng);
  a.push_back(serror);
  a.push_back(rng.chance(0.8) ? serror : rate(m.serror, rng));
  const auto rerror = rate(m.rerror, rng);
  a.push_back(rerror);
  a.push_back(rng.chance(0.8) ? rerror : rate(m.rerror, rng));
  a.push_back(rate(m.same_srv, rng));
  a.push_back(rate(m.diff_srv, rng));
  a.push_back(rate(m.srv_diff_host, rng));
  num(around(m.dh_count, 255, rng));
  num(around(m.dh_srv_count, 255, rng));
  a.push_back(rate(m.dh_same_srv, rng));
  a.push_back(rate(m.dh_diff_srv, rng));
  a.push_back(rate(m.dh_same_src_port, rng));
  a.push_back(rate(m.dh_srv_diff_host, rng));
  a.push_back(rate(m.dh_serror, rng));
  a.push_back(rate(m.dh_serror, rng));
  a.push_back(rate(m.dh_rerror, rng));
  a.push_back(rate(m.dh_rerror, rng));

  r.label = std::string(label);
  r.difficulty = static_cast<int>(6 + rng.below(16));
  return r;
}

}  // namespace

std::span<const AttackCount> nslkdd_composition(SyntheticSplit split) {
  if (split == SyntheticSplit::Train) return kTrainCounts;
  return kTestCounts;
}

std::vector<RawRecord> generate_nslkdd(SyntheticSplit split, const SyntheticOptions& options) {
  if (!(options.scale > 0.0) || !std::isfinite(options.scale)) {
    throw ConfigError("synthetic scale must be a positive number");
  }
  const auto split_tag = static_cast<std::uint64_t>(split) + 1;
  std::vector<RawRecord> records;
  const auto composition = nslkdd_composition(split);
  for (std::size_t li = 0; li < composition.size(); ++li) {
    const auto& [label, full_count] = composition[li];
    const auto count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(full_count) * options.scale)));
    const auto modes = modes_for(label);
    Weighted weights;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const double w = split == SyntheticSplit::Train ? modes[m].train : modes[m].test;
      weights.emplace_back(std::string_view{}, w);
    }
    detail::Rng rng(detail::mix_seed(options.seed, split_tag, li));
    for (std::size_t i = 0; i < count; ++i) {
      double total = 0.0;
      for (const auto& w : weights) total += w.second;
      double u = rng.uniform() * total;
      std::size_t chosen = 0;
      while (chosen + 1 < weights.size() && u >= weights[chosen].second) {
        u -= weights[chosen].second;
        ++chosen;
      }
      records.push_back(make_record(modes[chosen], label, rng));
    }
  }
  detail::Rng order(detail::mix_seed(options.seed, split_tag, 0xfeed));
  detail::shuffle(records, order);
  for (std::size_t i = 0; i < records.size(); ++i) records[i].line = i + 1;
  return records;
}

std::string format_nslkdd_record(const RawRecord& record) {
  std::string line;
  for (const auto& a : record.attributes) {
    line += a;
    line += ',';
  }
  line += record.label;
  if (record.difficulty) line += fmt::format(",{}", *record.difficulty);
  return line;
}

void write_nslkdd(std::span<const RawRecord> records, std::ostream& out) {
  for (const auto& r : records) out << format_nslkdd_record(r) << '\n';
}

void write_nslkdd(std::span<const RawRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_nslkdd(records, out);
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace nsoinn
