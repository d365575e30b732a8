#include <cstdio>

int main() {
  std::puts("myodyn: subcommands not wired up yet");
  return 1;
}
