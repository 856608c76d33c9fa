// placeholder, replaced when the CLI lands
int main() { return 0; }
