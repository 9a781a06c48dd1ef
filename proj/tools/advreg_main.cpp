#include <cstdio>

int main() {
  std::puts("advreg: not wired up yet");
  return 1;
}
