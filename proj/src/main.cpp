#include <cstdio>

int main() {
  std::puts("socibench: not yet wired");
  return 0;
}
