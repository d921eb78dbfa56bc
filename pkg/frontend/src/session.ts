// Bearer-token session kept in sessionStorage, never in the URL.

const TOKEN_KEY = "agriprice.token";
const EXPIRY_KEY = "agriprice.expiry";
const EMAIL_KEY = "agriprice.email";

export class Session {
  constructor(private storage: Storage = window.sessionStorage) {}

  set(token: string, expiresAt: number, email: string): void {
    this.storage.setItem(TOKEN_KEY, token);
    this.storage.setItem(EXPIRY_KEY, String(expiresAt));
    this.storage.setItem(EMAIL_KEY, email);
  }

  clear(): void {
    this.storage.removeItem(TOKEN_KEY);
    this.storage.removeItem(EXPIRY_KEY);
    this.storage.removeItem(EMAIL_KEY);
  }

  get token(): string | null {
    return this.storage.getItem(TOKEN_KEY);
  }

  get email(): string | null {
    return this.storage.getItem(EMAIL_KEY);
  }

  isActive(): boolean {
    const token = this.token;
    const expiry = Number(this.storage.getItem(EXPIRY_KEY) ?? 0);
    return Boolean(token) && expiry * 1000 > Date.now();
  }
}
